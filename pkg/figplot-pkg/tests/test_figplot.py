import math
import os

import numpy as np
import pytest

from figplot import (
    EmptyInputError,
    PlotSpec,
    SchemaMismatchError,
    build_fig1,
    render,
    select_scatter_points,
)

HEADER = "run,rounds,lambda_seed,estimator,flavor,delta_in_hex,p_best,neglog2_p,gap"


def make_csv(path, rows):
    path.write_text(HEADER + "\n" + "\n".join(rows) + "\n")
    return str(path)


def desk_like_csv(path, runs=30):
    rows = []
    for run in range(runs):
        rounds = 3 + run % 4
        for delta in range(16):
            p_circ = 2.0 ** -(4 + rounds + (delta % 3) - 1)
            p_plus = p_circ / 2 if run % 2 == 0 else p_circ * 2
            gap = (-math.log2(p_plus)) - (-math.log2(p_circ))
            for flavor, p in (("circ", p_circ), ("plus", p_plus)):
                rows.append(
                    f"{run},{rounds},7,montecarlo,{flavor},{delta:04x},{p:.10g},{-math.log2(p):.6f},{gap:.6f}"
                )
    return make_csv(path, rows)


def test_one_dot_per_run_and_zero_line(tmp_path):
    csv_path = desk_like_csv(tmp_path / "desk.csv")
    out = tmp_path / "fig.png"
    spec = PlotSpec(csv_path, str(out))
    fig, points = build_fig1(spec)
    assert len(points) == 30
    assert any(line.get_ydata()[0] == 0.0 for line in fig.axes[0].get_lines())
    render(spec)
    assert out.exists() and out.stat().st_size > 0


def test_best_delta_selected(tmp_path):
    rows = []
    for delta, p in ((0, 2.0 ** -8), (1, 2.0 ** -6), (2, 2.0 ** -9)):
        for flavor in ("circ", "plus"):
            rows.append(f"0,3,1,montecarlo,{flavor},{delta:04x},{p:.10g},{-math.log2(p):.6f},0.5")
    csv_path = make_csv(tmp_path / "a.csv", rows)
    points = select_scatter_points(PlotSpec(csv_path, "unused.png"))
    assert len(points) == 1
    assert points[0][0] == pytest.approx(6.0)  # the delta with the largest p


def test_single_row_on_zero_line(tmp_path):
    rows = ["0,3,1,montecarlo,circ,0001,0.001,9.965784,0.0",
            "0,3,1,montecarlo,plus,0001,0.001,9.965784,0.0"]
    csv_path = make_csv(tmp_path / "one.csv", rows)
    fig, points = build_fig1(PlotSpec(csv_path, "unused.png"))
    assert points == [(pytest.approx(9.965784), 0.0, 3)]


def test_round_filter_and_empty_input(tmp_path):
    csv_path = desk_like_csv(tmp_path / "desk.csv")
    points = select_scatter_points(PlotSpec(csv_path, "u.png", rounds_lo=4, rounds_hi=4))
    assert all(p[2] == 4 for p in points)
    with pytest.raises(EmptyInputError):
        select_scatter_points(PlotSpec(csv_path, "u.png", rounds_lo=9, rounds_hi=9))


def test_schema_mismatch_aborts_before_writing(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("run,rounds,flavor\n0,3,circ\n")
    out = tmp_path / "never.png"
    with pytest.raises(SchemaMismatchError):
        render(PlotSpec(str(bad), str(out)))
    assert not out.exists()


def test_x_bounded_by_16(tmp_path):
    csv_path = desk_like_csv(tmp_path / "desk.csv")
    points = select_scatter_points(PlotSpec(csv_path, "u.png"))
    assert all(p[0] <= 16.0 + 1e-9 for p in points)


def test_monotone_shade_by_rounds(tmp_path):
    csv_path = desk_like_csv(tmp_path / "desk.csv")
    fig, points = build_fig1(PlotSpec(csv_path, "u.png"))
    coll = fig.axes[0].collections[0]
    shades = coll.get_array()
    rounds = [p[2] for p in points]
    for (s1, r1) in zip(shades, rounds):
        for (s2, r2) in zip(shades, rounds):
            if r1 < r2:
                assert s1 < s2  # darker (higher Greys value) for more rounds


def test_pixel_identical_renders(tmp_path):
    csv_path = desk_like_csv(tmp_path / "desk.csv")
    out1, out2 = tmp_path / "p1.png", tmp_path / "p2.png"
    render(PlotSpec(csv_path, str(out1)))
    render(PlotSpec(csv_path, str(out2)))
    import matplotlib.image as mpimg

    assert np.array_equal(mpimg.imread(str(out1)), mpimg.imread(str(out2)))


def test_table_bars(tmp_path):
    csv_path = tmp_path / "cls.csv"
    lines = ["class,uniformity,count"]
    for k in range(3):
        for u, c in ((4, 800), (6, 6800), (8, 3000)):
            lines.append(f"G_{k},{u},{c}")
    csv_path.write_text("\n".join(lines) + "\n")
    out = tmp_path / "bars.png"
    assert render(PlotSpec(str(csv_path), str(out), kind="table-bars")) == str(out)
    assert out.exists()
    csv2 = tmp_path / "c8.csv"
    csv2.write_text("sbox,d,uniformity,op_count\naes,6,8,55\naes,6,10,8\n")
    out2 = tmp_path / "bars2.png"
    render(PlotSpec(str(csv2), str(out2), kind="table-bars"))
    assert out2.exists()


def test_cli_entry(tmp_path):
    from figplot import main

    csv_path = desk_like_csv(tmp_path / "desk.csv")
    out = tmp_path / "cli.png"
    assert main([csv_path, str(out), "--kind", "fig1", "--rounds", "3..6"]) == 0
    assert out.exists()
    assert main([csv_path, str(tmp_path / "x.png"), "--rounds", "9..9"]) == 1
