import pytest

from benchlock import benchgen


@pytest.fixture(scope="session")
def c17():
    return benchgen.gen_c17()


@pytest.fixture(scope="session")
def suite():
    """All benchmark netlists by name (c17 plus the eight-circuit set)."""
    return {name: benchgen.generate(name)
            for name in ("c17",) + benchgen.BENCHMARK_SUITE}


@pytest.fixture(scope="session")
def bench_dir(tmp_path_factory):
    """Benchmark suite written to .bench files once per session."""
    d = tmp_path_factory.mktemp("benchmarks")
    benchgen.write_suite(d)
    return d
