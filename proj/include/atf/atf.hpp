// Copyright 2026 The ATF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "atf/archive.hpp"
#include "atf/attention_profile.hpp"
#include "atf/bench.hpp"
#include "atf/calibration.hpp"
#include "atf/config.hpp"
#include "atf/error.hpp"
#include "atf/filtering.hpp"
#include "atf/flops.hpp"
#include "atf/image.hpp"
#include "atf/mask.hpp"
#include "atf/model.hpp"
#include "atf/numerics.hpp"
#include "atf/retrieval.hpp"
#include "atf/synthetic.hpp"
#include "atf/tensor.hpp"
#include "atf/vit.hpp"
