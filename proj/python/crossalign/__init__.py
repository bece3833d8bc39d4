# Copyright 2026 The crossalign Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Cross-modal aligned VAEs for zero-shot classification.

The heavy lifting happens in the native ``_core`` module; this layer only
converts between dicts and the JSON the core speaks.
"""

import json

import numpy as np

from crossalign import _core
from crossalign._core import ConfigError, CrossalignError, DataError, IoError, NumericError

__all__ = [
    "ConfigError",
    "CrossalignError",
    "DataError",
    "IoError",
    "NumericError",
    "harmonic_mean",
    "make_splits",
    "resolved_config",
    "run_cli",
    "run_experiment",
    "synth_dataset",
]


def _dump(config):
    return "" if config is None else json.dumps(config)


def resolved_config(config=None):
    """Preset defaults with `config` applied, as the CLI would echo them."""
    return json.loads(_core.resolved_config(_dump(config)))


def synth_dataset(config=None):
    """Returns (visual, labels, descriptors) for the run config's synthetic data."""
    visual, labels, descriptors = _core.synth_dataset(_dump(config))
    return visual, np.asarray(labels, dtype=np.int64), descriptors


def make_splits(num_classes, ratio, num_splits, seed):
    return [json.loads(s) for s in _core.make_splits(num_classes, ratio, num_splits, seed)]


def run_experiment(config=None):
    """Trains and evaluates every split; returns the report dict."""
    return json.loads(_core.run_experiment(_dump(config)))


def harmonic_mean(seen, unseen):
    return _core.harmonic_mean(seen, unseen)


def run_cli(args):
    """Runs the command-line tool in-process and returns its exit code."""
    return _core.run_cli([str(a) for a in args])
