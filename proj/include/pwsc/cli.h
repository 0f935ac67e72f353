// Copyright 2026 The pwsc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PWSC_CLI_H_
#define PWSC_CLI_H_

#include <ostream>
#include <string>
#include <vector>

#include "pwsc/training.h"

namespace pwsc {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitDataError = 3;
inline constexpr int kExitCorruptStream = 4;

// args[0] is the program name. Returns the process exit code.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Overlays the keys of a JSON config file on `config`; nested "codec" object
// for the model shape. Unknown keys are rejected.
void ApplyConfigJson(const std::string& text, TrainConfig& config);

// Training sidecar written next to a model file.
std::string SidecarPath(const std::string& model_path);

}  // namespace pwsc

#endif  // PWSC_CLI_H_
