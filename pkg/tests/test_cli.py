import json
import math

import numpy as np
import pytest

from latefuse import cli
from latefuse.cli import (
    EXIT_ABORT,
    EXIT_DATA,
    EXIT_OK,
    EXIT_USAGE,
    RunManifest,
    UsageError,
    compare,
    main,
    parse_set_values,
)
from latefuse.fusion import load_weights, mse
from latefuse.ingestion import (
    apply_minmax,
    assemble,
    load_ground_truth,
    load_normalization,
    read_inducer_csv,
)
from latefuse.optimizers import NonFiniteObjectiveError
from latefuse.synth import generate_perfect_inducer

ARTIFACTS = [
    "manifest.json",
    "norm_params.json",
    "weights.json",
    "optimizer_report.json",
    "eval_report.json",
    "eval_report.csv",
]


def data_flags(pair, out, extra=()):
    dev, test = pair
    return [
        "--dev", str(dev.inducer_paths[0].parent),
        "--test", str(test.inducer_paths[0].parent),
        "--truth", str(dev.truth_path), str(test.truth_path),
        "--out", str(out),
        *extra,
    ]


def read_bytes(out_dir, names):
    return {name: (out_dir / name).read_bytes() for name in names}


# ---------------------------------------------------------------- run

def test_run_equal_writes_uniform_weights(dataset_pair, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["run", "--method", "equal", *data_flags(dataset_pair, out)])
    assert code == EXIT_OK
    names, weights = load_weights(out / "weights.json")
    assert len(names) == 4
    assert np.all(weights == 0.25)
    for name in ARTIFACTS:
        assert (out / name).exists()
    assert not (out / "trace.csv").exists()
    line = capsys.readouterr().out
    assert "equal:" in line and "dev_mse=" in line and "test_map_at_10=" in line


def test_run_same_seed_twice_is_byte_identical(dataset_pair, tmp_path):
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        code = main(
            ["run", "--method", "pso", "--seed", "42",
             "--set", "stagnation_window=20", "--set", "swarm_size=40",
             *data_flags(dataset_pair, out)]
        )
        assert code == EXIT_OK
        # manifest.json embeds the output directory, so compare the rest
        outs.append(read_bytes(out, [n for n in ARTIFACTS if n != "manifest.json"]))
    assert outs[0] == outs[1]


def test_run_tnc_on_perfect_inducer_reaches_zero(tmp_path):
    dev = generate_perfect_inducer(120, 5, 10, seed=3, out_dir=tmp_path / "dev", key_prefix="d")
    test = generate_perfect_inducer(60, 5, 6, seed=4, out_dir=tmp_path / "test", key_prefix="t")
    out = tmp_path / "out"
    code = main(["run", "--method", "tnc", *data_flags((dev, test), out)])
    assert code == EXIT_OK
    report = json.loads((out / "optimizer_report.json").read_text())
    assert report["best_objective"] <= 1e-6
    assert report["converged"] is True


def test_run_manifest_rerun_reproduces_artifacts(dataset_pair, tmp_path):
    out_a = tmp_path / "a"
    code = main(
        ["run", "--method", "ga", "--seed", "9",
         "--set", "population_size=30", "--set", "stagnation_window=15",
         *data_flags(dataset_pair, out_a)]
    )
    assert code == EXIT_OK
    first = read_bytes(out_a, ARTIFACTS)

    out_b = tmp_path / "b"
    code = main(["run", "--manifest", str(out_a / "manifest.json"), "--out", str(out_b)])
    assert code == EXIT_OK
    second = read_bytes(out_b, ARTIFACTS)

    first.pop("manifest.json")
    second.pop("manifest.json")  # differs only in out_dir
    assert first == second


def test_run_trace_flag_controls_trace_csv(dataset_pair, tmp_path):
    out = tmp_path / "out"
    code = main(["run", "--method", "lbfgsb", *data_flags(dataset_pair, out, ["--trace"])])
    assert code == EXIT_OK
    lines = (out / "trace.csv").read_text().splitlines()
    assert lines[0] == "iteration,best_objective"
    assert len(lines) >= 2


def test_run_weights_json_names_match_inducers(dataset_pair, tmp_path):
    dev, _ = dataset_pair
    out = tmp_path / "out"
    assert main(["run", "--method", "equal", *data_flags(dataset_pair, out)]) == EXIT_OK
    names, _ = load_weights(out / "weights.json")
    assert names == sorted(p.stem for p in dev.inducer_paths)


def test_run_report_mse_matches_recomputation(dataset_pair, tmp_path):
    dev, _ = dataset_pair
    out = tmp_path / "out"
    assert main(
        ["run", "--method", "trust-region", *data_flags(dataset_pair, out)]
    ) == EXIT_OK
    report = json.loads((out / "optimizer_report.json").read_text())
    params = load_normalization(out / "norm_params.json")
    _, weights = load_weights(out / "weights.json")

    tables = [read_inducer_csv(p) for p in dev.inducer_paths]
    truth = load_ground_truth([dev.truth_path])
    matrix = apply_minmax(params, assemble(tables, truth))
    assert report["best_objective"] == mse(weights, matrix)


# ---------------------------------------------------------------- exit codes

def test_usage_error_unknown_method(dataset_pair, tmp_path, capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["run", "--method", "sgd", *data_flags(dataset_pair, tmp_path / "o")])
    assert excinfo.value.code == EXIT_USAGE
    capsys.readouterr()


def test_usage_error_missing_method_and_manifest(dataset_pair, tmp_path, capsys):
    code = main(["run", *data_flags(dataset_pair, tmp_path / "o")])
    assert code == EXIT_USAGE
    assert "either --method or --manifest" in capsys.readouterr().err


def test_usage_error_bad_set_value(dataset_pair, tmp_path, capsys):
    code = main(
        ["run", "--method", "pso", "--set", "swarm_size=many",
         *data_flags(dataset_pair, tmp_path / "o")]
    )
    assert code == EXIT_USAGE
    assert "must be numeric" in capsys.readouterr().err


def test_usage_error_unknown_set_key(dataset_pair, tmp_path, capsys):
    code = main(
        ["run", "--method", "pso", "--set", "swarm=40",
         *data_flags(dataset_pair, tmp_path / "o")]
    )
    assert code == EXIT_USAGE
    assert "swarm" in capsys.readouterr().err


def test_data_error_missing_file(dataset_pair, tmp_path, capsys):
    dev, test = dataset_pair
    code = main(
        ["run", "--method", "equal",
         "--dev", str(tmp_path / "nowhere"),
         "--test", str(test.inducer_paths[0].parent),
         "--truth", str(dev.truth_path),
         "--out", str(tmp_path / "o")]
    )
    assert code == EXIT_DATA
    capsys.readouterr()


def test_data_error_mismatched_inducer_sets(dataset_pair, tmp_path, capsys):
    dev, test = dataset_pair
    code = main(
        ["run", "--method", "equal",
         "--dev", *[str(p) for p in dev.inducer_paths],
         "--test", *[str(p) for p in test.inducer_paths[:-1]],
         "--truth", str(dev.truth_path), str(test.truth_path),
         "--out", str(tmp_path / "o")]
    )
    assert code == EXIT_DATA
    assert "differ" in capsys.readouterr().err


def test_abort_exit_code_on_non_finite_objective(dataset_pair, tmp_path, capsys, monkeypatch):
    def explode(method, objective, config):
        raise NonFiniteObjectiveError(np.zeros(config.dimension), math.nan)

    monkeypatch.setattr(cli, "optimize", explode)
    code = main(["run", "--method", "tnc", *data_flags(dataset_pair, tmp_path / "o")])
    assert code == EXIT_ABORT
    capsys.readouterr()


def test_failed_run_leaves_no_artifacts(dataset_pair, tmp_path, capsys, monkeypatch):
    # evaluation happens after optimization; a failure there must not leave files
    def explode(method, objective, config):
        raise NonFiniteObjectiveError(np.zeros(config.dimension), math.nan)

    monkeypatch.setattr(cli, "optimize", explode)
    out = tmp_path / "o"
    code = main(["run", "--method", "pso", *data_flags(dataset_pair, out)])
    assert code == EXIT_ABORT
    assert not out.exists() or not any(out.iterdir())
    capsys.readouterr()


def test_undefined_metric_is_a_data_error(tmp_path, capsys):
    # every test video gets only label-0 images, so no AP term is defined
    dev = generate_perfect_inducer(60, 3, 6, seed=5, out_dir=tmp_path / "dev", key_prefix="d")
    test = generate_perfect_inducer(30, 3, 3, seed=6, out_dir=tmp_path / "test", key_prefix="t")
    truth_lines = test.truth_path.read_text().splitlines()
    header, rows = truth_lines[0], truth_lines[1:]
    flattened = [",".join(r.split(",")[:2]) + ",0" for r in rows]
    test.truth_path.write_text("\n".join([header, *flattened]) + "\n")
    for path in test.inducer_paths:
        lines = path.read_text().splitlines()
        body = [",".join([*r.split(",")[:2], "0", r.split(",")[3]]) for r in lines[1:]]
        path.write_text("\n".join([lines[0], *body]) + "\n")

    out = tmp_path / "o"
    code = main(["run", "--method", "equal", *data_flags((dev, test), out)])
    assert code == EXIT_DATA
    assert not out.exists() or not any(out.iterdir())
    capsys.readouterr()


# ---------------------------------------------------------------- manifests

def test_manifest_round_trip():
    manifest = RunManifest(
        method="pso",
        dev_paths=["/d/a.csv"],
        test_paths=["/t/a.csv"],
        truth_paths=["/d/gt.csv"],
        out_dir="/o",
        k=5,
        seed=11,
        overrides={"swarm_size": 40.0},
        trace=True,
    )
    assert RunManifest.from_dict(manifest.to_dict()) == manifest


def test_manifest_rejects_unknown_method():
    with pytest.raises(UsageError):
        RunManifest(
            method="adam", dev_paths=["a"], test_paths=["b"],
            truth_paths=["c"], out_dir="o",
        )


def test_manifest_rejects_bad_k():
    with pytest.raises(UsageError):
        RunManifest(
            method="equal", dev_paths=["a"], test_paths=["b"],
            truth_paths=["c"], out_dir="o", k=0,
        )


def test_manifest_from_dict_missing_field():
    with pytest.raises(UsageError, match="missing field"):
        RunManifest.from_dict({"method": "equal"})


def test_parse_set_values():
    parsed = parse_set_values(["swarm_size=40", "tolerance=1e-6", "pso.inertia=0.5"])
    assert parsed == {"swarm_size": 40.0, "tolerance": 1e-6, "pso.inertia": 0.5}
    with pytest.raises(UsageError):
        parse_set_values(["swarm_size"])


# ---------------------------------------------------------------- compare

@pytest.fixture
def compare_out(dataset_pair, tmp_path, capsys):
    out = tmp_path / "cmp"
    code = main(
        ["compare", "--methods", "all", "--seed", "3",
         "--set", "pso.swarm_size=30", "--set", "pso.stagnation_window=15",
         "--set", "ga.population_size=30", "--set", "ga.stagnation_window=15",
         "--set", "ga.max_generations=120",
         *data_flags(dataset_pair, out)]
    )
    assert code == EXIT_OK
    capsys.readouterr()
    return out


def test_compare_writes_summary_for_all_methods(compare_out):
    lines = (compare_out / "summary.csv").read_text().splitlines()
    assert lines[0] == "method,dev_mse,test_map_at_10,evaluations,wall_time"
    methods = [line.split(",")[0] for line in lines[1:]]
    assert sorted(methods) == sorted(
        ["equal", "pso", "ga", "nelder-mead", "trust-region", "lbfgsb", "tnc"]
    )
    for method in methods:
        assert (compare_out / method / "weights.json").exists()


def test_compare_every_method_beats_or_ties_equal(compare_out):
    lines = (compare_out / "summary.csv").read_text().splitlines()[1:]
    dev_mse = {line.split(",")[0]: float(line.split(",")[1]) for line in lines}
    for method, value in dev_mse.items():
        assert value <= dev_mse["equal"], method


def test_compare_summary_mse_is_bit_equal_to_recomputation(compare_out, dataset_pair):
    dev, _ = dataset_pair
    tables = [read_inducer_csv(p) for p in dev.inducer_paths]
    truth = load_ground_truth([dev.truth_path])
    lines = (compare_out / "summary.csv").read_text().splitlines()[1:]
    for line in lines:
        method, dev_mse = line.split(",")[0], float(line.split(",")[1])
        params = load_normalization(compare_out / method / "norm_params.json")
        matrix = apply_minmax(params, assemble(tables, truth))
        _, weights = load_weights(compare_out / method / "weights.json")
        assert dev_mse == mse(weights, matrix), method


def test_compare_summary_json_mirrors_csv(compare_out):
    doc = json.loads((compare_out / "summary.json").read_text())
    lines = (compare_out / "summary.csv").read_text().splitlines()[1:]
    assert len(doc) == len(lines)
    for row, line in zip(doc, lines):
        cells = line.split(",")
        assert row["method"] == cells[0]
        assert row["dev_mse"] == float(cells[1])
        assert row["test_map_at_10"] == float(cells[2])
        assert row["evaluations"] == int(cells[3])
        assert math.isclose(row["wall_time"], float(cells[4]), abs_tol=1e-9)


def test_compare_subset_and_dedup(dataset_pair, tmp_path, capsys):
    out = tmp_path / "cmp2"
    code = main(
        ["compare", "--methods", "equal,tnc,equal", *data_flags(dataset_pair, out)]
    )
    assert code == EXIT_OK
    lines = (out / "summary.csv").read_text().splitlines()
    assert [line.split(",")[0] for line in lines[1:]] == ["equal", "tnc"]
    capsys.readouterr()


def test_compare_rejects_empty_method_list(dataset_pair, tmp_path, capsys):
    code = main(["compare", "--methods", " , ", *data_flags(dataset_pair, tmp_path / "o")])
    assert code == EXIT_USAGE
    assert "no methods selected" in capsys.readouterr().err


def test_compare_rejects_unknown_method(dataset_pair, tmp_path, capsys):
    code = main(["compare", "--methods", "equal,sgd", *data_flags(dataset_pair, tmp_path / "o")])
    assert code == EXIT_USAGE
    capsys.readouterr()


def test_compare_api_rejects_empty_manifest_list(tmp_path):
    with pytest.raises(UsageError):
        compare([], tmp_path)


def test_compare_api_rejects_mismatched_data(dataset_pair, tmp_path):
    dev, test = dataset_pair
    common = dict(
        test_paths=[str(test.inducer_paths[0].parent)],
        truth_paths=[str(dev.truth_path), str(test.truth_path)],
    )
    a = RunManifest(
        method="equal", dev_paths=[str(dev.inducer_paths[0].parent)],
        out_dir=str(tmp_path / "a"), **common,
    )
    b = RunManifest(
        method="tnc", dev_paths=[str(tmp_path / "elsewhere")],
        out_dir=str(tmp_path / "b"), **common,
    )
    with pytest.raises(UsageError, match="share"):
        compare([a, b], tmp_path)


def test_compare_scoped_override_reaches_only_named_method(dataset_pair, tmp_path, capsys):
    out = tmp_path / "cmp3"
    code = main(
        ["compare", "--methods", "pso,ga",
         "--set", "pso.swarm_size=17",
         "--set", "stagnation_window=12",
         *data_flags(dataset_pair, out)]
    )
    assert code == EXIT_OK
    pso_manifest = json.loads((out / "pso" / "manifest.json").read_text())
    ga_manifest = json.loads((out / "ga" / "manifest.json").read_text())
    assert pso_manifest["overrides"] == {"swarm_size": 17.0, "stagnation_window": 12.0}
    assert ga_manifest["overrides"] == {"stagnation_window": 12.0}
    pso_report = json.loads((out / "pso" / "optimizer_report.json").read_text())
    assert pso_report["config"]["method_params"]["swarm_size"] == 17.0
    capsys.readouterr()


def test_compare_rejects_override_scoped_to_unselected_method(dataset_pair, tmp_path, capsys):
    code = main(
        ["compare", "--methods", "equal", "--set", "pso.swarm_size=10",
         *data_flags(dataset_pair, tmp_path / "o")]
    )
    assert code == EXIT_USAGE
    capsys.readouterr()
