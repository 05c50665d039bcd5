# Copyright (c) the medinet authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Median pixel difference convolution, image degradation and a toy network."""

from ._medinet import (
    ConvLayer,
    IoError,
    Model,
    ShapeError,
    degradation_name,
    degrade,
    gradcheck,
    jpeg_quant_table,
    make_shapes_dataset,
    mean_total_variation,
    median_filter,
    median_filter_u8,
    parse_degradation,
    read_image,
    write_image,
)

__version__ = "0.1.0"

__all__ = [
    "ConvLayer",
    "IoError",
    "Model",
    "ShapeError",
    "degradation_name",
    "degrade",
    "gradcheck",
    "jpeg_quant_table",
    "make_shapes_dataset",
    "mean_total_variation",
    "median_filter",
    "median_filter_u8",
    "parse_degradation",
    "read_image",
    "write_image",
]
