# Copyright 2026 The greybox Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Certified learning of linear uncertainty models for partially known LTI plants."""

from ._core import (
    AugmentedSystem,
    ConfigError,
    DataMatrix,
    DimensionError,
    FilterDesign,
    GreyboxError,
    InfeasibleError,
    LearnerOptions,
    LearnReport,
    LtiSystem,
    NumericalError,
    Provenance,
    UncertaintyModel,
    augment,
    build_data_matrix,
    cost_J,
    design_filter,
    extended_model,
    h2_norm,
    hinf_norm,
    is_detectable,
    learn_constraint_modified,
    learn_cost_modified,
    learn_least_squares,
    reproduce,
    spectral_abscissa,
)

__all__ = [name for name in dir() if not name.startswith("_")]
