import numpy as np
import pytest

from ifsdyn import cli
from ifsdyn.config import RunConfig, custom_system, dump, parse, parse_domain
from ifsdyn.errors import ConfigurationError
from ifsdyn.grid import hausdorff_distance, read_pgm, read_rle

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def run(argv, tmp_path, name="out"):
    out = tmp_path / name
    code = cli.main([*argv, "--out", str(out)])
    return code, out


# ---------------------------------------------------------------------------
# Config files
# ---------------------------------------------------------------------------


def test_default_dump_round_trips():
    text = dump(RunConfig())
    assert dump(parse(text)) == text


def test_full_dump_round_trips():
    cfg = parse(
        """
        [run]
        command = chaingraph
        system = tent2
        res = 2000
        eta = 0.02
        [params]
        s = 1.8
        [chaingraph]
        view = closure
        [hutchinson]
        epsilons = 0.1, 0.05
        """.replace("\n        ", "\n")
    )
    assert cfg.res == 2000 and cfg.eta == 0.02 and dict(cfg.params) == {"s": 1.8}
    assert cfg.hutchinson.epsilons == (0.1, 0.05)
    text = dump(cfg)
    assert dump(parse(text)) == text
    assert parse(text) == cfg


def test_custom_system_round_trips():
    text = "[run]\nsystem = custom\n[custom]\ndomain = interval 0 1\nmap1 = affine1d 0.5 0\nmap2 = affine1d 0.5 0.5\n"
    cfg = parse(text)
    ifs = cfg.build_system()
    assert ifs.m == 2 and ifs.dim == 1
    assert parse(dump(cfg)) == cfg


@pytest.mark.parametrize(
    "text",
    [
        "[run]\nres = many\n",
        "[run]\ncolour = blue\n",
        "[mystery]\nx = 1\n",
        "[run]\nsystem = nowhere\n",
        "[run]\ncommand = fly\n",
        "[run]\nres = 0\n",
        "[run]\neta = -1\n",
        "[attractor]\nmax_iters = 3.5\n",
        "[custom]\nbogus = 1\n",
        "not an ini file",
    ],
)
def test_malformed_configs_are_rejected(text):
    with pytest.raises(ConfigurationError):
        parse(text)


def test_domain_parsing():
    assert parse_domain("interval 0 3").dim == 1
    assert parse_domain("triangle 0 0 1 0 0.5 0.8").triangle is not None
    for bad in ("", "disc 0 0 1", "box 0 0 1", "interval a b"):
        with pytest.raises(ConfigurationError):
            parse_domain(bad)


def test_custom_system_needs_maps():
    with pytest.raises(ConfigurationError):
        custom_system("interval 0 1", ())
    with pytest.raises(ConfigurationError):
        custom_system("interval 0 1", ("warp 2",))


# ---------------------------------------------------------------------------
# Command line
# ---------------------------------------------------------------------------


def test_dump_config_merges_flags(tmp_path, capsys):
    cfgfile = tmp_path / "run.ini"
    cfgfile.write_text("[run]\nres = 77\n[params]\ns = 1.7\n")
    code = cli.main(["chaingraph", "--config", str(cfgfile), "--system", "tent2", "--eta", "0.05",
                     "--dump-config"])
    assert code == 0
    cfg = parse(capsys.readouterr().out)
    assert cfg.command == "chaingraph" and cfg.res == 77 and cfg.eta == 0.05
    assert dict(cfg.params) == {"s": 1.7}


def test_malformed_config_file_exits_2(tmp_path, capsys):
    cfgfile = tmp_path / "bad.ini"
    cfgfile.write_text("[run]\nres = lots\n")
    assert cli.main(["attractor", "--config", str(cfgfile)]) == 2
    assert "res" in capsys.readouterr().err


def test_missing_config_file_exits_1(tmp_path):
    assert cli.main(["attractor", "--config", str(tmp_path / "absent.ini")]) == 1


def test_unwritable_output_exits_1(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code = cli.main(["chaosgame", "--system", "sierpinski", "--res", "16", "--total", "100",
                     "--burn", "10", "--out", str(blocker / "sub")])
    assert code == 1


def test_unknown_panel_exits_2(tmp_path):
    code, _ = run(["hutchinson", "--system", "tent2", "--panel", "sideways"], tmp_path)
    assert code == 2


def test_unknown_parameter_exits_2(tmp_path):
    code, _ = run(["attractor", "--system", "sierpinski", "--mu", "3"], tmp_path)
    assert code == 2


def test_nonconvergence_exits_3(tmp_path):
    code, out = run(["attractor", "--system", "sierpinski", "--res", "64", "--trap", "disc",
                     "--max-iters", "1"], tmp_path)
    assert code == 3
    assert "converged false" in (out / "report.txt").read_text()


def test_non_trapping_region_exits_2(tmp_path):
    code, out = run(["verify-trap", "--system", "logistic_triangle", "--res", "48", "--trap", "q0.4"],
                    tmp_path)
    assert code == 2
    assert "forward_invariant false" in (out / "trap_report.txt").read_text()


def test_attractor_outputs(tmp_path):
    code, out = run(["attractor", "--system", "sierpinski", "--res", "64", "--trap", "disc"], tmp_path)
    assert code == 0
    pgm, rle = read_pgm(out / "attractor.pgm"), read_rle(out / "attractor.rle")
    assert pgm == rle and not pgm.is_empty
    assert "converged true" in (out / "report.txt").read_text()
    for png in ("attractor.png", "trace.png"):
        assert (out / png).read_bytes().startswith(PNG_MAGIC)


def test_attractor_file_support(tmp_path):
    code, first = run(["attractor", "--system", "sierpinski", "--res", "64", "--trap", "disc"], tmp_path, "a")
    assert code == 0
    code, second = run(["attractor", "--system", "sierpinski", "--res", "64",
                        "--trap", f"file:{first / 'attractor.pgm'}"], tmp_path, "b")
    assert code == 0
    again, before = read_pgm(second / "attractor.pgm"), read_pgm(first / "attractor.pgm")
    assert again.issubset(before)
    assert hausdorff_distance(again, before) <= before.grid.cell_diameter
    code, _ = run(["attractor", "--system", "sierpinski", "--res", "32",
                   "--trap", f"file:{first / 'attractor.pgm'}"], tmp_path, "c")
    assert code == 2


def test_chaingraph_outputs_are_deterministic(tmp_path):
    argv = ["chaingraph", "--system", "tent2", "--res", "1500"]
    assert run(argv, tmp_path, "a")[0] == 0
    assert run(argv, tmp_path, "b")[0] == 0
    names = ["nodes.csv", "graph.dot", "graph_weak.dot", "recurrent.pgm", "recurrent_strong.pgm",
             "report.txt", "nodes.png"]
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    report = (tmp_path / "a" / "report.txt").read_text()
    assert "strong_nodes 2" in report
    csv_lines = (tmp_path / "a" / "nodes.csv").read_text().splitlines()
    assert len(csv_lines) >= 3
    assert "->" in (tmp_path / "a" / "graph.dot").read_text()


def test_hutchinson_outputs(tmp_path):
    code, out = run(["hutchinson", "--system", "tent2", "--res", "20000", "--epsilons", "0.05"], tmp_path)
    assert code == 0
    rows = (out / "defects.csv").read_text().splitlines()
    assert rows[0] == "set,cells,defect,defect_cells" and len(rows) == 5
    assert all(float(r.split(",")[3]) <= 2 for r in rows[1:])
    report = (out / "chains_report.txt").read_text()
    assert report.count("verified true") == 2 and "verified false" not in report


def test_hutchinson_chains_need_tent(tmp_path):
    code, _ = run(["hutchinson", "--system", "sierpinski", "--res", "32", "--panel", "none"], tmp_path)
    assert code == 2


def test_bifurcation_outputs(tmp_path):
    argv = ["bifurcation", "--family", "tent2_fixed_second", "--range", "1", "2", "--steps", "8",
            "--second", "1.4142135623730951", "--total", "2000", "--burn", "200", "--bins", "100"]
    assert run(argv, tmp_path, "a")[0] == 0
    assert run(argv, tmp_path, "b")[0] == 0
    for name in ("sweep.csv", "sweep.pgm", "sweep.png"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert (tmp_path / "a" / "sweep.csv").read_text().startswith("param,bin_lo,bin_hi,count\n")


def test_chaosgame_outputs(tmp_path):
    code, out = run(["chaosgame", "--system", "sierpinski", "--res", "64", "--total", "5000",
                     "--burn", "100", "--start", "0.3", "0.3", "--seed", "3"], tmp_path)
    assert code == 0
    assert read_pgm(out / "orbit.pgm") == read_rle(out / "orbit.rle")
    assert "escaped false" in (out / "report.txt").read_text()
    assert (out / "orbit.png").read_bytes().startswith(PNG_MAGIC)


def test_verify_trap_success(tmp_path):
    code, out = run(["verify-trap", "--system", "sierpinski", "--res", "96", "--trap", "disc"], tmp_path)
    assert code == 0
    text = (out / "trap_report.txt").read_text()
    assert "forward_invariant true" in text and "timeout" not in text


def test_bad_subcommand_exits_2():
    with pytest.raises(SystemExit) as info:
        cli.main(["teleport"])
    assert info.value.code == 2


def test_one_dimensional_plot(tmp_path):
    code, out = run(["attractor", "--system", "tent2", "--res", "500"], tmp_path)
    assert code == 0
    assert (out / "attractor.png").read_bytes().startswith(PNG_MAGIC)
    lo, hi = read_pgm(out / "attractor.pgm").span()
    assert np.isclose(hi[0], 0.95, atol=3 / 500)
