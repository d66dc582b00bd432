// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "groklab/activation.hpp"
#include "groklab/analytic.hpp"
#include "groklab/checkpoint.hpp"
#include "groklab/dataset.hpp"
#include "groklab/error.hpp"
#include "groklab/experiment.hpp"
#include "groklab/json_io.hpp"
#include "groklab/metrics.hpp"
#include "groklab/network.hpp"
#include "groklab/optimizer.hpp"
#include "groklab/pca.hpp"
#include "groklab/random.hpp"
#include "groklab/svg.hpp"
