// Copyright (c) 2026 the diffstego authors
// SPDX-License-Identifier: Apache-2.0

// Umbrella header for the whole library.
#pragma once

#include "diffstego/channel.hpp"
#include "diffstego/ddim.hpp"
#include "diffstego/eval.hpp"
#include "diffstego/formats.hpp"
#include "diffstego/image.hpp"
#include "diffstego/metrics.hpp"
#include "diffstego/patterns.hpp"
#include "diffstego/pnm.hpp"
#include "diffstego/prior.hpp"
#include "diffstego/rng.hpp"
#include "diffstego/schedule.hpp"
#include "diffstego/stego.hpp"
