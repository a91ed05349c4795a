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

#include <cstring>
#include <fstream>
#include <random>

#include "doctest.h"
#include "lhpo/checkpoint.h"
#include "lhpo/errors.h"
#include "test_support.h"

using namespace lhpo;

TEST_SUITE("checkpoint") {

TEST_CASE("surrogate roundtrip is bit exact") {
  auto p = SurrogateParams::Initialize(testing::SmallArch(3), 4);
  p.weights()[0] = -0.0;
  p.weights()[1] = 5e-324;
  p.weights()[2] = 0.1 + 0.2;
  std::string bytes = SerializeSurrogate(p);
  CHECK(bytes.substr(0, 5) == "LHPO1");
  SurrogateParams q = DeserializeSurrogate(bytes);
  CHECK(q == p);
  CHECK(std::signbit(q.weights()[0]));
  CHECK(SerializeSurrogate(q) == bytes);
}

TEST_CASE("ensemble roundtrip through a file") {
  auto dir = testing::TempDir("ckpt");
  Ensemble e = InitEnsemble(3, Architecture::Default(2), 77);
  WriteEnsembleCheckpoint(e, dir / "e.lhpo");
  CHECK(ReadEnsembleCheckpoint(dir / "e.lhpo") == e);
  WriteSurrogateCheckpoint(e.members[1], dir / "m.lhpo");
  CHECK(ReadSurrogateCheckpoint(dir / "m.lhpo") == e.members[1]);
}

TEST_CASE("corrupt checkpoints are rejected") {
  Ensemble e = InitEnsemble(2, testing::SmallArch(2), 1);
  const std::string bytes = SerializeEnsemble(e);
  CHECK_THROWS_AS(DeserializeEnsemble("LHPO2" + bytes.substr(5)), ParseError);
  CHECK_THROWS_AS(DeserializeEnsemble(bytes.substr(0, bytes.size() - 3)), ParseError);
  CHECK_THROWS_AS(DeserializeEnsemble(bytes + "x"), ParseError);
  CHECK_THROWS_AS(DeserializeEnsemble(""), ParseError);

  std::string nan_bytes = bytes;
  const double nan = std::nan("");
  std::memcpy(nan_bytes.data() + nan_bytes.size() - 8, &nan, 8);
  CHECK_THROWS_AS(DeserializeEnsemble(nan_bytes), InvariantError);

  CHECK_THROWS_AS(ReadEnsembleCheckpoint("/nonexistent/e.lhpo"), IoError);
  CHECK_THROWS_AS(WriteEnsembleCheckpoint(e, "/proc/lhpo/e.lhpo"), IoError);
}

}  // TEST_SUITE
