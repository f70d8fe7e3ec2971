// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "fisherlab/autodiff.hpp"
#include "fisherlab/binary_io.hpp"
#include "fisherlab/checkpoint.hpp"
#include "fisherlab/config.hpp"
#include "fisherlab/curvature.hpp"
#include "fisherlab/dataset.hpp"
#include "fisherlab/error.hpp"
#include "fisherlab/gradients.hpp"
#include "fisherlab/idx.hpp"
#include "fisherlab/labels.hpp"
#include "fisherlab/metrics.hpp"
#include "fisherlab/nets.hpp"
#include "fisherlab/optim.hpp"
#include "fisherlab/params.hpp"
#include "fisherlab/regularizers.hpp"
#include "fisherlab/report.hpp"
#include "fisherlab/rng.hpp"
#include "fisherlab/stats.hpp"
#include "fisherlab/studies.hpp"
#include "fisherlab/tensor.hpp"
#include "fisherlab/trainer.hpp"
