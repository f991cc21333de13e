# Copyright 2026 The Fairproxy Authors
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

"""Race-proxy models and disparity estimators."""

import sys

from ._fairproxy import (
    BisgModel,
    CbisgModel,
    FairproxyError,
    GeoTable,
    SurnameTable,
    __version__,
    bayes_estimate,
    fit_posterior,
    load_cbisg,
    load_geo_table,
    load_surname_table,
    necessary_consistency_bound,
    normalize,
    posterior_mean,
    run_cli,
    sufficient_consistency_bound,
    weighted_estimate,
)

__all__ = [
    "BisgModel",
    "CbisgModel",
    "FairproxyError",
    "GeoTable",
    "SurnameTable",
    "__version__",
    "bayes_estimate",
    "fit_posterior",
    "load_cbisg",
    "load_geo_table",
    "load_surname_table",
    "main",
    "necessary_consistency_bound",
    "normalize",
    "posterior_mean",
    "run_cli",
    "sufficient_consistency_bound",
    "weighted_estimate",
]


def main(argv=None):
    """Console entry point mirroring the native `fairproxy` binary."""
    code, out, err = run_cli(list(sys.argv[1:] if argv is None else argv))
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code
