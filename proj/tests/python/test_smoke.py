"""End-to-end smoke checks for the python binding."""

import math
import os
import pathlib

import pytest

import gral

SOURCE_DIR = pathlib.Path(
    os.environ.get("GRAL_SOURCE_DIR", pathlib.Path(__file__).parents[2])
)


def test_version():
    assert gral.__version__ == "0.1.0"


def test_graph_construction_and_views():
    g = gral.TextualGraph(
        {1: "harry potter", 2: "j. k. rowling", 3: "1997"},
        [(1, "book.author.works_written", 2), (1, "book.published", 3)],
    )
    assert g.node_count() == 3
    assert g.edge_count() == 2
    assert g.node_text(2) == "j. k. rowling"
    assert g.node_ids() == [1, 2, 3]
    assert g.neighbors(1) == [2, 3]
    assert g.incident_edges(1) == [0, 1]
    assert g.edges()[0] == (1, "book.author.works_written", 2)

    text = gral.linearize(g)
    assert "harry potter" in text and "book.published" in text

    sub, parents = gral.induced_subgraph(g, [1, 3])
    assert sub.node_ids() == [1, 3]
    assert parents == [1]


def test_graph_errors_carry_codes():
    with pytest.raises(gral.Error, match="UnknownNode"):
        gral.TextualGraph({1: "a"}, []).node_text(2)
    with pytest.raises(gral.Error, match="DanglingEdge"):
        gral.TextualGraph({1: "a"}, [(1, "e", 9)])


def test_toy_corpus_loads():
    g = gral.load_graph_files(
        str(SOURCE_DIR / "data/toy/nodes.csv"),
        str(SOURCE_DIR / "data/toy/edges.csv"),
    )
    assert g.node_count() == 1850
    assert g.edge_count() == 2018
    assert g.node_text(3) == "j. k. rowling"


def test_cosine():
    assert gral.cosine([1.0, 0.0], [2.0, 0.0]) == pytest.approx(1.0)
    assert gral.cosine([1.0, 0.0], [0.0, 5.0]) == pytest.approx(0.0)
    assert gral.cosine([0.0, 0.0], [1.0, 0.0]) == 0.0


def test_top_k_and_prizes():
    items = {
        1: [1.0, 0.0],
        2: [0.0, 1.0],
        3: [math.sqrt(0.5), math.sqrt(0.5)],
    }
    ranked = gral.top_k([1.0, 0.0], items, 2)
    assert [i for i, _ in ranked] == [1, 3]
    assert ranked[0][1] == pytest.approx(1.0)

    prizes = gral.assign_prizes([(5, 0.9), (7, 0.8)], [(0, 0.7)], 3, 0.5)
    assert prizes.node_value(5) == 3.0
    assert prizes.node_value(7) == 2.0
    assert prizes.node_value(99) == 0.0
    assert prizes.edge_value(0) == 3.0
    assert prizes.edge_gain(0) == 2.5


def test_pcst_exact_on_path():
    g = gral.TextualGraph(
        {1: "a", 2: "b", 3: "c"}, [(1, "e0", 2), (2, "e1", 3)]
    )
    prizes = gral.PrizeMap()
    prizes.node_prize = {1: 2.0, 3: 1.0}
    prizes.edge_cost = 0.25
    prizes.k = 2

    best = gral.solve_pcst(g, prizes, gral.PcstMode.exact)
    assert best.nodes == [1, 2, 3]
    assert best.edge_indices == [0, 1]
    assert best.objective == pytest.approx(2.5)
    assert gral.pcst_objective(prizes, [1, 2, 3], [0, 1]) == pytest.approx(2.5)

    heur = gral.solve_pcst(g, prizes, gral.PcstMode.heuristic)
    assert heur.objective >= 0.8 * best.objective


def test_alignment_losses():
    kl = gral.node_alignment_loss([0.5, 0.5], [0.25, 0.75])
    assert kl == pytest.approx(0.0719, abs=1e-4)
    assert gral.node_alignment_loss([0.3, 0.7], [0.3, 0.7]) == pytest.approx(0.0)

    eye = [[1.0, 0.0], [0.0, 1.0]]
    assert gral.graph_alignment_loss(eye, eye, 1.0) == pytest.approx(
        0.3133, abs=1e-4
    )
    assert gral.graph_alignment_loss(eye, eye, 1.0) == pytest.approx(
        gral.graph_alignment_loss(eye, eye, 1.0)
    )

    p = gral.anchor_distribution([[1.0, 0.0], [0.0, 1.0]], [1.0, 0.0])
    assert p[0] > p[1]
    assert sum(p) == pytest.approx(1.0)


def test_prompts_and_tokens():
    g = gral.TextualGraph({1: "harry potter", 2: "j. k. rowling"},
                          [(1, "book.author.works_written", 2)])
    prompt = gral.extraction_prompt("who wrote it?", "j. k. rowling", g)
    assert "who wrote it?" in prompt
    assert "harry potter" in prompt

    assert gral.count_tokens("") == 0
    assert gral.count_tokens("harry potter, 1997") == 4
    assert gral.count_tokens("a--b") == 3


def test_answer_metrics():
    text = "Harry Potter and the Philosopher's Stone!"
    assert gral.normalize_answer(text) == "harry potter and philosopher s stone"
    assert gral.split_candidates("x; y\nz") == ["x", "y", "z"]

    m = gral.exact_metrics("x; y", ["y", "z"])
    assert (m.hit1, m.f1, m.accuracy) == (0, pytest.approx(0.5), 0)
    m = gral.exact_metrics("The Theater", ["theater"])
    assert (m.hit1, m.f1, m.accuracy) == (1, pytest.approx(1.0), 1)
    with pytest.raises(gral.Error, match="EmptyGold"):
        gral.exact_metrics("x", [])
