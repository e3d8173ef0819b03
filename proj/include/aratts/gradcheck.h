// aratts/gradcheck.h

// Copyright 2026  The aratts authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ARATTS_GRADCHECK_H_
#define ARATTS_GRADCHECK_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "aratts/tape.h"
#include "aratts/tensor.h"

// Central finite-difference verification of the tape's backward rules.  Each
// case rebuilds its graph from scratch per evaluation, so any internal
// randomness must be derived from a seed fixed inside the builder.
namespace aratts::gradcheck {

struct Case {
  std::string name;
  std::vector<Tensor> leaves;
  // Builds a scalar loss from tape leaves created over `leaves`.
  std::function<ad::Var(ad::Tape &, const std::vector<ad::Var> &)> build;
};

struct CaseResult {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = false;
};

// Relative error uses denominator max(|analytic|, |numeric|, 0.01) so
// near-zero gradients are compared absolutely.
constexpr double kGradTolerance = 1e-4;
constexpr double kFdStep = 1e-5;

// sabotage != 0 adds that constant to one analytic gradient entry before the
// comparison; the finite-difference check must then fail.  It exists so the
// harness itself can be shown to catch a broken backward rule.
CaseResult RunCase(const Case &c, double h = kFdStep, double sabotage = 0.0);

// One case per tape primitive plus composite graphs: an encoder slice
// (embedding, conv, norm, relu, tiny bidirectional recurrence), one
// location-sensitive attention step, and the likelihood of a two-flow
// vocoder over 64 samples.
std::vector<Case> StandardCases(uint64_t seed);

std::vector<CaseResult> RunAll(uint64_t seed);
// Self-test entry: the named case gets a sabotaged analytic gradient.
std::vector<CaseResult> RunAll(uint64_t seed, const std::string &sabotage_case);

}  // namespace aratts::gradcheck

#endif  // ARATTS_GRADCHECK_H_
