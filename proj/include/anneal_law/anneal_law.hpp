/*
 * Copyright 2026 The anneal-law Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Umbrella header (everything except the HTTP binding).

#include "anneal_law/analysis.hpp"
#include "anneal_law/area.hpp"
#include "anneal_law/error.hpp"
#include "anneal_law/fit.hpp"
#include "anneal_law/ingest.hpp"
#include "anneal_law/law.hpp"
#include "anneal_law/lbfgs.hpp"
#include "anneal_law/manifest.hpp"
#include "anneal_law/rng.hpp"
#include "anneal_law/schedule.hpp"
#include "anneal_law/service.hpp"
