# Copyright 2026 The asmlm Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

from ._asmlm import (
    AsmlmError,
    attention_mask,
    bcsd_loss,
    combined_pretrain_loss,
    fcl_loss,
    hex_to_decimal,
    lm_loss,
    lr_at,
    normalize,
    null_model_recall,
    ocl_loss,
    pass_at_k,
    recall_at_1,
    synthetic_corpus,
)

__all__ = [
    "AsmlmError",
    "attention_mask",
    "bcsd_loss",
    "combined_pretrain_loss",
    "fcl_loss",
    "hex_to_decimal",
    "lm_loss",
    "lr_at",
    "normalize",
    "null_model_recall",
    "ocl_loss",
    "pass_at_k",
    "recall_at_1",
    "synthetic_corpus",
]
