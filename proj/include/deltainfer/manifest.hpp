/* Copyright 2026 The DeltaInfer Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <filesystem>
#include <string>

#include "deltainfer/graph.hpp"

namespace deltainfer {

struct LoadOptions {
  // Fold a batch-norm into the convolution feeding it when that convolution
  // has no other consumer. Otherwise batch-norm runs as an affine layer.
  bool fold_batchnorm = true;
};

// Reads a JSON manifest and its float32 weight blob. The blob path inside the
// manifest is resolved relative to the manifest's directory.
ModelGraph load_model(const std::filesystem::path& manifest_path, const LoadOptions& options = {});

// Writes a manifest plus blob that load_model reads back into an equivalent
// graph. Batch-norms are already folded or affine at this point.
void save_model(const ModelGraph& graph, const std::filesystem::path& manifest_path,
                const std::filesystem::path& blob_path);

// Copies a manifest, replacing each activation's epsilon with the one in
// `graph` (matched by layer name). The weight reference is rewritten so the
// copy still finds the original blob.
void write_tuned_manifest(const std::filesystem::path& source_manifest,
                          const std::filesystem::path& out_manifest, const ModelGraph& graph);

ActivationKind parse_activation(const std::string& name);
const char* activation_name(ActivationKind fn);

}  // namespace deltainfer
