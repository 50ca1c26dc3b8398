// Copyright 2026 The zdp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ZDP_ZDP_H_
#define ZDP_ZDP_H_

#include "zdp/accountant.h"
#include "zdp/activations.h"
#include "zdp/audit.h"
#include "zdp/ctensor.h"
#include "zdp/data.h"
#include "zdp/error.h"
#include "zdp/mechanism.h"
#include "zdp/nn.h"
#include "zdp/rng.h"
#include "zdp/trainer.h"
#include "zdp/wirtinger.h"

#endif  // ZDP_ZDP_H_
