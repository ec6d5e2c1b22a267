from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from p2pswarm import manifest as mf
from p2pswarm.coding import CodedConfig, nc_simulate
from p2pswarm.core import ModelParams
from p2pswarm.manifest import ExperimentManifest, ManifestError
from p2pswarm.reporting import (
    fmt,
    read_csv,
    read_keyvalue,
    write_departures_csv,
    write_keyvalue,
    write_profile_csv,
    write_trajectory_csv,
)
from p2pswarm.runner import RunReport
from p2pswarm.simulator import SimConfig, Trajectory, simulate

MANIFESTS = sorted((Path(__file__).parent.parent / "manifests").glob("*.toml"))


def tiny_traj():
    return Trajectory(
        K=2,
        times=np.array([0.0, 0.5, 1.0]),
        total=np.array([0, 1, 2]),
        n=np.array([[0, 0], [1, 0], [1, 1]]),
        arrivals=np.array([0, 1, 2]),
        departures_count=np.zeros(3, dtype=int),
        holders=np.zeros((3, 2), dtype=int),
        departures=np.array([[0.75, 0.25]]),
    )


class TestGoldenCsv:
    def test_trajectory(self, tmp_path):
        p = write_trajectory_csv(tiny_traj(), tmp_path / "t.csv")
        assert p.read_text() == "t,total,n_0,n_1\n0,0,0,0\n0.5,1,1,0\n1,2,1,1\n"

    def test_profile(self, tmp_path):
        p = write_profile_csv([2.5, 1 / 3], tmp_path / "p.csv")
        assert p.read_text() == "piece,avg_holders\n1,2.5\n2,0.333333333333\n"

    def test_departures(self, tmp_path):
        p = write_departures_csv(tiny_traj(), tmp_path / "d.csv")
        assert p.read_text() == "t_depart,sojourn\n0.75,0.25\n"

    def test_piece_run_header(self, tmp_path):
        tr = simulate(SimConfig(ModelParams(4, 1.0, 1, 1), horizon=20, rng_seed=1))
        head, rows = read_csv(write_trajectory_csv(tr, tmp_path / "x.csv"))
        assert head == ["t", "total", "n_0", "n_1", "n_2", "n_3"] and len(rows) == 21

    def test_coded_run_header(self, tmp_path):
        tr = nc_simulate(CodedConfig(SimConfig(ModelParams(3, 0.5, 1, 1), horizon=10, rng_seed=1), 2))
        head, _ = read_csv(write_trajectory_csv(tr, tmp_path / "x.csv"))
        assert head == ["t", "total", "dim_0", "dim_1", "dim_2"]

    def test_keyvalue_roundtrip(self, tmp_path):
        p = write_keyvalue({"a": 1, "b": 0.1, "ok": True}, tmp_path / "k.txt")
        assert p.read_text() == "a = 1\nb = 0.1\nok = true\n"
        assert read_keyvalue(p) == {"a": "1", "b": "0.1", "ok": "true"}

    def test_fmt(self):
        assert [fmt(np.int64(3)), fmt(float("nan")), fmt(np.bool_(False)), fmt(-np.inf)] == ["3", "nan", "false", "-inf"]


class TestRunReport:
    def test_aggregates(self):
        rep = RunReport("x", "piece", 0.5, (0, 1), ["replica", "lambda", "v"])
        rep.rows = [{"replica": i, "lambda": 0.5, "v": v} for i, v in enumerate([1.0, 2.0, 6.0])]
        assert rep.mean("v") == 3.0
        assert rep.se("v") == pytest.approx(np.std([1, 2, 6], ddof=1) / np.sqrt(3))
        assert rep.summary()["mean_v"] == 3.0 and rep.numeric == ["v"]


BASE = dict(name="t", engine="piece", K=3, lambdas=(0.5,))

manifests = st.builds(
    ExperimentManifest,
    name=st.text("abc_-", min_size=1, max_size=8),
    engine=st.sampled_from(["piece", "coded", "mu-infinity", "alt-system"]),
    K=st.integers(2, 64),
    lambdas=st.lists(st.floats(0.01, 5, allow_nan=False), min_size=1, max_size=3).map(tuple),
    mu=st.floats(0.1, 5),
    Us=st.floats(0.1, 5),
    q=st.sampled_from([2, 3, 4, 256]),
    policy=st.sampled_from(["random-useful", "rarest-first", "sequential"]),
    replicas=st.integers(1, 100),
    horizon=st.floats(100, 1e4),
    sample_dt=st.sampled_from([0.5, 1.0, 2.0]),
    rng_seed=st.integers(0, 2**31),
    initial=st.just("empty"),
    outputs=st.text("abc/_", min_size=1, max_size=10),
    max_peers=st.integers(1, 10**7),
)


class TestManifest:
    @given(manifests)
    def test_roundtrip(self, m):
        assert mf.loads(mf.dumps(m)) == m

    @pytest.mark.parametrize("path", MANIFESTS, ids=[p.stem for p in MANIFESTS])
    def test_bundled_manifests(self, path):
        m = mf.load(path)
        assert mf.loads(mf.dumps(m)) == m and m.name == path.stem

    def test_window_default(self):
        assert ExperimentManifest(**BASE, horizon=1000).effective_window == (200, 1000)

    def test_scalar_and_list_lambda(self):
        text = 'name = "a"\nengine = "piece"\n[params]\nK = 3\nlambda = %s\n'
        assert mf.loads(text % "0.5").lambdas == (0.5,)
        assert mf.loads(text % "[0.5, 1]").lambdas == (0.5, 1.0)

    @pytest.mark.parametrize(
        "text,field",
        [
            ('engine = "piece"\n[params]\nK = 3\nlambda = 1\n', "name"),
            ('name = "a"\nengine = "warp"\n[params]\nK = 3\nlambda = 1\n', "engine"),
            ('name = "a"\nengine = "piece"\nreplicas = 0\n[params]\nK = 3\nlambda = 1\n', "replicas"),
            ('name = "a"\nengine = "piece"\nreplicas = "many"\n[params]\nK = 3\nlambda = 1\n', "replicas"),
            ('name = "a"\nengine = "piece"\ncolour = 1\n[params]\nK = 3\nlambda = 1\n', "colour"),
            ('name = "a"\nengine = "piece"\n[params]\nK = 3\n', "params.lambda"),
            ('name = "a"\nengine = "piece"\n[params]\nK = 3\nlambda = 1\nrho = 2\n', "params.rho"),
            ('name = "a"\nengine = "piece"\n[params]\nK = 0\nlambda = 1\n', "params"),
            ('name = "a"\nengine = "piece"\nwindow = [5, 1]\n[params]\nK = 3\nlambda = 1\n', "window"),
            ('name = "a"\nengine = "piece"\ninitial = "one-club"\n[params]\nK = 3\nlambda = 1\n', "initial_size"),
            ('name = "a"\nengine = "piece"\n[params]\nK = 3\nlambda = 1\n[extra]\nx = 1\n', "extra"),
            ('name = "a"\nengine = "piece"\nmax_peers = 0\n[params]\nK = 3\nlambda = 1\n', "max_peers"),
            ("this is not toml", "<file>"),
        ],
    )
    def test_field_errors(self, text, field):
        with pytest.raises(ManifestError) as e:
            mf.loads(text)
        assert e.value.field == field

    def test_output_override(self, monkeypatch, tmp_path):
        m = ExperimentManifest(**BASE, outputs="somewhere")
        monkeypatch.delenv(mf.OUTPUT_ENV, raising=False)
        assert m.output_dir() == Path("somewhere")
        monkeypatch.setenv(mf.OUTPUT_ENV, str(tmp_path))
        assert m.output_dir() == tmp_path / "t"

    def test_overrides_revalidate(self):
        m = ExperimentManifest(**BASE)
        assert m.with_overrides(seed=5, replicas=3).rng_seed == 5
        with pytest.raises(ManifestError):
            m.with_overrides(replicas=0)
