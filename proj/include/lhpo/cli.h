// Copyright 2026 The LHPO Authors
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

#ifndef LHPO_CLI_H_
#define LHPO_CLI_H_

#include <iostream>
#include <string>
#include <vector>

namespace lhpo {

// Entry point of the `lhpo` tool. `args` excludes the program name. Returns
// the process exit status; diagnostics go to `err`.
int RunCli(const std::vector<std::string>& args, std::ostream& out = std::cout,
           std::ostream& err = std::cerr);

// Edit distance used for "did you mean" suggestions.
int EditDistance(const std::string& a, const std::string& b);

}  // namespace lhpo

#endif  // LHPO_CLI_H_
