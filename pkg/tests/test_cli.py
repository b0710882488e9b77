import numpy as np
import pytest

from kng.cli import build_parser, main


@pytest.fixture
def mean_csv(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, 1000)
    path = tmp_path / "m.csv"
    np.savetxt(path, x[:, None], delimiter=",", header="x1", comments="")
    return path, x.mean()


@pytest.fixture
def reg_csv(tmp_path):
    rng = np.random.default_rng(1)
    X = np.c_[np.ones(200), rng.uniform(-1, 1, 200)]
    y = np.clip(X @ [0.1, -0.4] + 0.2 * rng.standard_normal(200), -1, 1)
    path = tmp_path / "r.csv"
    np.savetxt(path, np.c_[X, y], delimiter=",", header="x1,x2,y", comments="")
    return path


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def usage_code(argv, capsys):
    with pytest.raises(SystemExit) as info:
        main([str(a) for a in argv])
    err = capsys.readouterr().err
    return info.value.code, err


def test_help_lists_every_flag(capsys):
    parser = build_parser()
    for cmd, flags in {
        "release": ["--data", "--objective", "--mechanism", "--epsilon", "--seed", "--bound-b",
                    "--radius-r", "--tau", "--cx", "--paper-constants", "--mcmc-steps", "--proposal-width"],
        "simulate-linear": ["--n-grid", "--replicates", "--mcmc-steps", "--seed", "--out", "--jobs", "--mechanisms"],
        "simulate-quantile": ["--tau", "--n-grid", "--replicates"],
    }.items():
        with pytest.raises(SystemExit) as info:
            parser.parse_args([cmd, "--help"])
        assert info.value.code == 0
        text = capsys.readouterr().out
        for flag in flags:
            assert flag in text


def test_release_knorm_mean(mean_csv, capsys):
    path, xbar = mean_csv
    code, out, _ = run(["release", "--data", path, "--objective", "mean", "--mechanism", "knorm-mean",
                        "--epsilon", 1, "--seed", 3], capsys)
    assert code == 0
    value = float(out.strip())
    # Laplace scale 2r/(n eps) = 0.002
    assert abs(value - xbar) < 0.03


def test_release_is_deterministic(reg_csv, capsys):
    argv = ["release", "--data", reg_csv, "--objective", "linear", "--mechanism", "kng", "--seed", 5,
            "--mcmc-steps", 50]
    assert run(argv, capsys)[1] == run(argv, capsys)[1]
    row = run(argv, capsys)[1].strip().split(",")
    assert len(row) == 2


def test_seed_from_environment(reg_csv, capsys, monkeypatch):
    argv = ["release", "--data", reg_csv, "--objective", "linear", "--mechanism", "objective-perturbation"]
    monkeypatch.setenv("KNG_SEED", "9")
    a = run(argv, capsys)[1]
    b = run(argv + ["--seed", 9], capsys)[1]
    c = run(argv + ["--seed", 10], capsys)[1]
    assert a == b != c
    monkeypatch.setenv("KNG_SEED", "abc")
    assert usage_code(argv, capsys)[0] == 2


def test_paper_constants_flag_changes_draw(reg_csv, capsys):
    argv = ["release", "--data", reg_csv, "--objective", "quantile", "--mechanism", "kng", "--tau", 0.8,
            "--mcmc-steps", 200, "--seed", 1]
    assert run(argv, capsys)[1] != run(argv + ["--paper-constants"], capsys)[1]


@pytest.mark.parametrize(
    "objective, mechanism, needle",
    [
        ("quantile", "objective-perturbation", "strongly convex"),
        ("median", "exponential", "value sensitivity"),
        ("linear", "knorm-mean", "cannot be used"),
        ("mean", "private-quantile", "cannot be used"),
    ],
)
def test_incompatible_pairs(reg_csv, capsys, objective, mechanism, needle):
    code, err = usage_code(
        ["release", "--data", reg_csv, "--objective", objective, "--mechanism", mechanism], capsys
    )
    assert code == 2
    assert needle in err


def test_bound_violation_names_row(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("x1,y\n0.5,0.1\n0.2,1.7\n")
    code, _, err = run(["release", "--data", path, "--objective", "linear", "--mechanism", "kng"], capsys)
    assert code == 1
    assert "row 1" in err


def test_missing_file(tmp_path, capsys):
    code, _, err = run(["release", "--data", tmp_path / "none.csv", "--objective", "mean",
                        "--mechanism", "kng"], capsys)
    assert code == 1 and "error" in err


def test_unknown_flag(reg_csv, capsys):
    code, _ = usage_code(["release", "--data", reg_csv, "--objective", "mean", "--mechanism", "kng",
                          "--bogus"], capsys)
    assert code == 2


def test_private_quantile_release(reg_csv, capsys):
    code, out, _ = run(["release", "--data", reg_csv, "--objective", "quantile", "--mechanism",
                        "private-quantile", "--epsilon", 5], capsys)
    assert code == 0 and -1 <= float(out) <= 1


def test_simulate_linear(tmp_path, capsys):
    out = tmp_path / "lin.csv"
    argv = ["simulate-linear", "--n-grid", "50,100", "--replicates", 2, "--mcmc-steps", 20, "--seed", 7,
            "--out", out, "--jobs", 1]
    code, text, _ = run(argv, capsys)
    assert code == 0 and str(out) in text and " s" in text
    first = out.read_bytes()
    assert len(first.decode().strip().splitlines()) == 1 + 4 * 2
    run(argv, capsys)
    assert out.read_bytes() == first


def test_simulate_quantile_subset(tmp_path, capsys):
    out = tmp_path / "q.csv"
    code, _, _ = run(["simulate-quantile", "--n-grid", "10,100", "--replicates", 2, "--mcmc-steps", 10,
                      "--mechanisms", "kng", "--out", out], capsys)
    assert code == 0
    rows = out.read_text().strip().splitlines()[1:]
    assert len(rows) == 2 and all(r.startswith("kng,") for r in rows)


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate-linear", "--replicates", "0"],
        ["simulate-linear", "--n-grid", "100,10"],
        ["simulate-linear", "--n-grid", "a,b"],
        ["simulate-linear", "--mechanisms", "kng,laplace"],
        ["simulate-linear", "--jobs", "0"],
        ["simulate-quantile", "--tau", "1.5"],
        ["simulate-quantile", "--mechanisms", "kng,objective-perturbation"],
    ],
)
def test_simulation_usage_errors(argv, capsys):
    assert usage_code(argv, capsys)[0] == 2
