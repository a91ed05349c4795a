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

#ifndef LHPO_CHECKPOINT_H_
#define LHPO_CHECKPOINT_H_

#include <filesystem>
#include <string>
#include <string_view>

#include "lhpo/ensemble.h"
#include "lhpo/surrogate.h"

namespace lhpo {

// Binary checkpoints, all integers and doubles little-endian:
//
//   surrogate := "LHPO1" shape weights
//   ensemble  := "LHPO1" u32:member_count { u64:seed shape weights }*
//   shape     := u32:config_dim u32:set_dim
//                u32:n_encoder_hidden u32:width*  u32:n_head_hidden u32:width*
//                u64:weight_count
//   weights   := f64 * weight_count
//
// Doubles are stored by bit pattern, so round trips are exact.
inline constexpr std::string_view kCheckpointMagic = "LHPO1";

std::string SerializeSurrogate(const SurrogateParams& params);
SurrogateParams DeserializeSurrogate(std::string_view bytes);

std::string SerializeEnsemble(const Ensemble& ensemble);
Ensemble DeserializeEnsemble(std::string_view bytes);

void WriteSurrogateCheckpoint(const SurrogateParams& params, const std::filesystem::path& path);
SurrogateParams ReadSurrogateCheckpoint(const std::filesystem::path& path);

void WriteEnsembleCheckpoint(const Ensemble& ensemble, const std::filesystem::path& path);
Ensemble ReadEnsembleCheckpoint(const std::filesystem::path& path);

}  // namespace lhpo

#endif  // LHPO_CHECKPOINT_H_
