"""Shared fixtures: small meshes and desk-scale pipeline runs."""

import pytest

from seqtopo import benchmarks
from seqtopo import cli
from seqtopo import config as config_mod


@pytest.fixture(scope="session")
def desk_config():
    def make(benchmark):
        return config_mod.PipelineConfig(
            benchmark=benchmark, resolution=(20, 10, 10), drho_tol=0.02
        )
    return make


@pytest.fixture(scope="session")
def desk_pipeline(desk_config, tmp_path_factory):
    """Run the desk-scale sequential pipeline once per benchmark and cache
    (summary, output directory)."""
    cache = {}

    def run(benchmark):
        if benchmark not in cache:
            out = tmp_path_factory.mktemp(f"desk_{benchmark}")
            cfg = desk_config(benchmark)
            summary = cli.run_pipeline(cfg, out, log=lambda *_: None)
            cache[benchmark] = (summary, out)
        return cache[benchmark]

    return run


@pytest.fixture
def small_cantilever():
    """4x2x2 cantilever system, small enough for dense oracles."""
    return benchmarks.build_benchmark("cantilever", (4, 2, 2))
