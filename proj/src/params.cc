// src/params.cc

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

#include "aratts/params.h"

#include <utility>

#include "aratts/error.h"

namespace aratts {

Tensor &ParamStore::Add(const std::string &name, Tensor init, bool trainable) {
  auto [it, inserted] =
      entries_.emplace(name, Entry{std::move(init), trainable});
  if (!inserted)
    Throw(ErrorKind::kBadConfig, "duplicate parameter name: " + name);
  names_.push_back(name);
  return it->second.value;
}

bool ParamStore::Has(const std::string &name) const {
  return entries_.count(name) != 0;
}

Tensor &ParamStore::Get(const std::string &name) {
  auto it = entries_.find(name);
  if (it == entries_.end())
    Throw(ErrorKind::kBadConfig, "unknown parameter name: " + name);
  return it->second.value;
}

const Tensor &ParamStore::Get(const std::string &name) const {
  auto it = entries_.find(name);
  if (it == entries_.end())
    Throw(ErrorKind::kBadConfig, "unknown parameter name: " + name);
  return it->second.value;
}

bool ParamStore::Trainable(const std::string &name) const {
  auto it = entries_.find(name);
  if (it == entries_.end())
    Throw(ErrorKind::kBadConfig, "unknown parameter name: " + name);
  return it->second.trainable;
}

}  // namespace aratts
