#pragma once

#include "fairsel/data_model.hpp"
#include "fairsel/error.hpp"
#include "fairsel/fairness_tree.hpp"
#include "fairsel/group_metrics.hpp"
#include "fairsel/ranking.hpp"
#include "fairsel/recall_balancer.hpp"
#include "fairsel/reporting.hpp"
#include "fairsel/synth_data.hpp"
#include "fairsel/temporal_eval.hpp"
#include "fairsel/util.hpp"
