import json

import pytest

import jsonschema

from kpz_renorm.cli import main
from kpz_renorm.experiments import (
    EXPERIMENTS,
    config_hash,
    default_config,
    resolve_config,
    run_and_report,
    run_experiment,
    write_report,
)

TINY = {
    "qv": dict(M=128, K=500, dt=1e-4, levels=(4, 8), replicas=8, x_index=64),
    "cov": dict(M=128, K=250, dt=1e-4, replicas=40,
                quadruples=((0.01, 0.01, 0.5, 0.5), (0.005, 0.015, 0.3, 0.36))),
    "ito": dict(M=128, K=40, dt=2e-3, replicas=6),
    "weak": dict(M=128, K=40, dt=2e-3, replicas=6),
    "diverge": dict(M=128, K=200, dt=1e-4, levels=(4, 8, 16), replicas=4),
    "assoc": dict(M=128, K=400, dt=1e-4, levels=(4, 8, 16), replicas=3),
    "section": dict(M=128, K=64, dt=1e-4, replicas=12, eps_steps=(32, 16, 8)),
}


def _schema():
    from importlib.resources import files
    return json.loads(files("kpz_renorm").joinpath("schemas/summary.schema.json").read_text())


@pytest.mark.parametrize("name", EXPERIMENTS)
def test_each_experiment_writes_valid_reports(name, tmp_path):
    cfg = default_config(name, output_dir=str(tmp_path), **TINY[name])
    result = run_experiment(cfg)
    paths = write_report(result, wall_time=0.5)
    csv_path, summary_path = paths
    assert csv_path.read_text().splitlines()[0].count(",") >= 2   # header row
    summary = json.loads(summary_path.read_text())
    jsonschema.validate(summary, _schema())
    assert summary["experiment"] == name
    assert summary["config_hash"] == config_hash(cfg)
    assert all(set(c) == {"name", "observed", "threshold", "pass"}
               for c in summary["criteria"])


def test_assoc_csv_schema(tmp_path):
    cfg = default_config("assoc", output_dir=str(tmp_path), **TINY["assoc"])
    csv_path, _ = write_report(run_experiment(cfg), wall_time=0.0)
    header = csv_path.read_text().splitlines()[0]
    assert header == "n,testfn_id,pairing,reference_pairing,abs_error"


def test_byte_identical_reproduction(tmp_path):
    outs = []
    for sub in ("a", "b"):
        cfg = default_config("qv", output_dir=str(tmp_path / sub), **TINY["qv"])
        result = run_experiment(cfg)
        outs.append(write_report(result, wall_time=0.0))
    csv_a, sum_a = outs[0]
    csv_b, sum_b = outs[1]
    assert csv_a.read_bytes() == csv_b.read_bytes()
    ja, jb = json.loads(sum_a.read_text()), json.loads(sum_b.read_text())
    ja.pop("wall_time"), jb.pop("wall_time")
    assert ja == jb


def test_config_hash_sensitivity(tmp_path):
    base = default_config("qv", **TINY["qv"])
    assert config_hash(base) == config_hash(default_config("qv", **TINY["qv"]))
    changed = default_config("qv", **{**TINY["qv"], "replicas": 9})
    assert config_hash(base) != config_hash(changed)
    moved = default_config("qv", output_dir="elsewhere", **TINY["qv"])
    assert config_hash(base) == config_hash(moved)   # output location is result-neutral


def test_confidence_interval_shrinks_with_replicas():
    """4x the replicas shrinks the CI width by about half (coarse check)."""
    small = run_experiment(default_config("qv", **{**TINY["qv"], "levels": (8,), "replicas": 60}))
    big = run_experiment(default_config("qv", **{**TINY["qv"], "levels": (8,), "replicas": 240}))
    w_small = small.detail["levels"]["8"]["ci95_halfwidth"]
    w_big = big.detail["levels"]["8"]["ci95_halfwidth"]
    assert 0.4 <= w_big / w_small <= 0.6


def test_replica_parallelism_is_scheduling_independent(tmp_path):
    seq = run_experiment(default_config("qv", workers=1, **TINY["qv"]))
    par = run_experiment(default_config("qv", workers=2, **TINY["qv"]))
    assert seq.rows == par.rows
    assert [c.as_dict() for c in seq.criteria] == [c.as_dict() for c in par.criteria]


def test_seed_changes_results():
    a = run_experiment(default_config("qv", master_seed=1, **TINY["qv"]))
    b = run_experiment(default_config("qv", master_seed=2, **TINY["qv"]))
    assert a.rows != b.rows


def test_env_var_overrides_master_seed(monkeypatch):
    monkeypatch.setenv("KPZ_RENORM_SEED", "777")
    cfg = resolve_config("qv", None, {"master_seed": 5, **TINY["qv"]})
    assert cfg.master_seed == 777


def test_toml_config_and_flag_precedence(tmp_path):
    cfgfile = tmp_path / "desk.toml"
    cfgfile.write_text(
        "[common]\nmaster_seed = 11\nreplicas = 4\n\n[qv]\nreplicas = 6\n")
    from kpz_renorm.experiments import load_config_file
    sections = load_config_file(cfgfile)
    cfg = resolve_config("qv", sections, {"M": 128, "K": 500, "dt": 1e-4,
                                          "levels": (4,), "x_index": 64})
    assert cfg.master_seed == 11
    assert cfg.replicas == 6          # [qv] overrides [common]
    cfg2 = resolve_config("qv", sections, {"replicas": 9, "M": 128, "K": 500,
                                           "dt": 1e-4, "levels": (4,), "x_index": 64})
    assert cfg2.replicas == 9         # flags override the file


def test_resolution_constraint_rejected_at_config_level():
    with pytest.raises(Exception, match="resolution"):
        default_config("qv", M=256, levels=(1024,))


def test_cov_quadruples_validated_against_horizon():
    from kpz_renorm import ConfigurationError
    with pytest.raises(ConfigurationError, match="horizon"):
        default_config("cov", M=128, K=250, dt=1e-4, replicas=10)  # default times exceed T
    with pytest.raises(ConfigurationError, match="x_index"):
        default_config("qv", M=128, K=500, dt=1e-4, levels=(4,), x_index=500)


# ---------------------------------------------------------------------------
# CLI surface
# ---------------------------------------------------------------------------

def test_cli_qv_run(tmp_path, capsys):
    rc = main(["qv", "--M", "128", "--K", "500", "--dt", "1e-4", "--n", "8",
               "--replicas", "8", "--seed", "42", "--x-index", "64",
               "--output-dir", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "qv_rel_err_n8" in out
    assert (tmp_path / "qv.csv").exists()
    assert (tmp_path / "summary.json").exists()
    header = (tmp_path / "qv.csv").read_text().splitlines()[0]
    assert header == "replica_id,x_index,qv_observed,qv_predicted"


def test_cli_resolution_error_exit_code(tmp_path, capsys):
    rc = main(["qv", "--M", "256", "--n", "1024", "--output-dir", str(tmp_path)])
    assert rc == 2
    assert "resolution" in capsys.readouterr().err


def test_cli_all_tiny(tmp_path, capsys):
    cfgfile = tmp_path / "tiny.toml"
    lines = ["[common]", "output_dir = '" + str(tmp_path / "out").replace("\\", "/") + "'"]
    for name, over in TINY.items():
        lines.append(f"[{name}]")
        for k, v in over.items():
            if isinstance(v, tuple):
                if v and isinstance(v[0], tuple):
                    inner = ", ".join("[" + ", ".join(repr(x) for x in q) + "]" for q in v)
                    lines.append(f"{k} = [{inner}]")
                else:
                    lines.append(f"{k} = [{', '.join(str(x) for x in v)}]")
            else:
                lines.append(f"{k} = {v}")
    cfgfile.write_text("\n".join(lines) + "\n")

    rc = main(["all", "--config", str(cfgfile)])
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    jsonschema.validate(summary, _schema())
    assert len(summary["experiments"]) == len(EXPERIMENTS)
    assert rc in (0, 1)   # tiny scale need not meet desk-scale criteria
    assert (rc == 0) == summary["all_pass"]
    for name in EXPERIMENTS:
        assert (tmp_path / "out" / f"{name}.csv").exists()


def test_dump_flag_writes_binary_artifacts(tmp_path):
    cfg = default_config("qv", output_dir=str(tmp_path), dump=True, **TINY["qv"])
    write_report(run_experiment(cfg), wall_time=0.0)
    assert (tmp_path / "dumps" / "qv_noise_rep0.bin").exists()
    assert (tmp_path / "dumps" / "qv_noise_rep0.json").exists()
    from kpz_renorm import load_white_noise
    noise = load_white_noise(tmp_path / "dumps" / "qv_noise_rep0")
    assert noise.increments.shape == (500, 128)
