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

#include <cstddef>
#include <vector>

#include "deltainfer/tensor.hpp"

namespace deltainfer {

struct ConvGeometry {
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride = 1;
  std::size_t dilation = 1;
  std::size_t padding = 0;

  // Standard convolution output extent; throws ShapeError when the padded
  // input is smaller than the dilated kernel.
  std::size_t output_height(std::size_t in_h) const;
  std::size_t output_width(std::size_t in_w) const;
};

// Input pixels read by a rectangle of output pixels. The union of the
// receptive fields of a rectangle of outputs is the product rows x cols, so
// it is stored as two sorted index lists clipped to the tensor. The begin/end
// fields describe the unclipped bounding box (may extend into padding).
struct InputWindow {
  long row_begin = 0;
  long row_end = 0;
  long col_begin = 0;
  long col_end = 0;
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;

  std::size_t box_height() const { return static_cast<std::size_t>(row_end - row_begin); }
  std::size_t box_width() const { return static_cast<std::size_t>(col_end - col_begin); }
};

InputWindow conv_input_window(const ConvGeometry& g, std::size_t in_h,
                              std::size_t in_w, std::size_t out_y0,
                              std::size_t out_y1, std::size_t out_x0,
                              std::size_t out_x1);

// Output bit p is set iff any input bit inside p's receptive field is set.
// Padding pixels count as permanently inactive.
UpdateMask mask_dilate_conv(const UpdateMask& mask, std::size_t kernel_h,
                            std::size_t kernel_w, std::size_t stride,
                            std::size_t dilation, std::size_t padding);
UpdateMask mask_dilate_conv(const UpdateMask& mask, const ConvGeometry& g);

// Chebyshev dilation, clipped at the image border.
UpdateMask mask_dilate_radius(const UpdateMask& mask, std::size_t radius);

UpdateMask mask_union(const UpdateMask& a, const UpdateMask& b);

std::size_t tile_active_count(const UpdateMask& mask, std::size_t batch,
                              const InputWindow& window);

}  // namespace deltainfer
