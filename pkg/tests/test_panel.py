import numpy as np
import pytest

from netdisturb import (
    Flow,
    FlowIndex,
    NetworkSnapshot,
    NodeRoster,
    PanelError,
    RosterEntry,
    index_flows,
    load_panel,
    load_roster,
    log_flow_vector,
)
from netdisturb.panel import write_edge_csv, write_roster_csv


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def roster_file(tmp_path):
    return write(
        tmp_path / "roster.csv",
        "node,active_from,active_to\nUSA,1950,2016\nGBR,1950,2016\nSUN,1950,1991\n",
    )


class TestLoadPanel:
    def test_single_row(self, tmp_path, roster_file):
        edges = write(
            tmp_path / "edges.csv", "period,sender,receiver,value\n1952,USA,GBR,10.5\n"
        )
        panel = load_panel(edges, roster_file)
        assert len(panel) == 1
        assert panel[0].period == 1952
        assert panel[0].n_flows == 1
        assert panel[0].value("USA", "GBR") == 10.5

    def test_duplicate_dyad_rejected(self, tmp_path, roster_file):
        edges = write(
            tmp_path / "edges.csv",
            "period,sender,receiver,value\n1952,USA,GBR,10.5\n1952,USA,GBR,10.5\n",
        )
        with pytest.raises(PanelError, match="duplicate dyad USA -> GBR"):
            load_panel(edges, roster_file)

    def test_periods_sorted(self, tmp_path, roster_file):
        edges = write(
            tmp_path / "edges.csv",
            "period,sender,receiver,value\n1953,USA,GBR,3.0\n1952,USA,GBR,10.5\n",
        )
        panel = load_panel(edges, roster_file)
        assert [s.period for s in panel] == [1952, 1953]

    def test_nonpositive_value_rejected(self, tmp_path, roster_file):
        edges = write(
            tmp_path / "edges.csv", "period,sender,receiver,value\n1952,USA,GBR,0\n"
        )
        with pytest.raises(PanelError, match="nonpositive value"):
            load_panel(edges, roster_file)

    def test_self_flow_rejected(self, tmp_path, roster_file):
        edges = write(
            tmp_path / "edges.csv", "period,sender,receiver,value\n1952,USA,USA,1.0\n"
        )
        with pytest.raises(PanelError, match="self-flow"):
            load_panel(edges, roster_file)

    def test_inactive_node_rejected(self, tmp_path, roster_file):
        edges = write(
            tmp_path / "edges.csv", "period,sender,receiver,value\n1995,USA,SUN,1.0\n"
        )
        with pytest.raises(PanelError, match="SUN.*not active in period 1995"):
            load_panel(edges, roster_file)

    def test_unknown_node_rejected(self, tmp_path, roster_file):
        edges = write(
            tmp_path / "edges.csv", "period,sender,receiver,value\n1952,USA,XXX,1.0\n"
        )
        with pytest.raises(PanelError, match="XXX"):
            load_panel(edges, roster_file)

    def test_bad_header(self, tmp_path, roster_file):
        edges = write(tmp_path / "edges.csv", "period,from,to,value\n")
        with pytest.raises(PanelError, match="expected header"):
            load_panel(edges, roster_file)

    def test_missing_file(self, tmp_path, roster_file):
        with pytest.raises(PanelError, match="cannot open"):
            load_panel(tmp_path / "nope.csv", roster_file)

    def test_error_names_line(self, tmp_path, roster_file):
        edges = write(
            tmp_path / "edges.csv",
            "period,sender,receiver,value\n1952,USA,GBR,1.0\n1952,GBR,USA,-2\n",
        )
        with pytest.raises(PanelError, match="edges.csv:3"):
            load_panel(edges, roster_file)


class TestRoster:
    def test_duplicate_node(self):
        with pytest.raises(PanelError, match="duplicate roster node"):
            NodeRoster(
                entries=(
                    RosterEntry("USA", 1950, 2016),
                    RosterEntry("USA", 1950, 2016),
                )
            )

    def test_inverted_span(self):
        with pytest.raises(PanelError, match="active_from"):
            RosterEntry("USA", 2016, 1950)

    def test_active(self, tmp_path, roster_file):
        roster = load_roster(roster_file)
        assert roster.active("SUN", 1991)
        assert not roster.active("SUN", 1992)
        assert not roster.active("XXX", 1960)


class TestIndexFlows:
    def test_lexicographic_order(self):
        snapshot = NetworkSnapshot(
            period=1,
            flows=(Flow("B", "A", 1.0), Flow("A", "B", 2.0), Flow("A", "C", 3.0)),
        )
        assert index_flows(snapshot).dyads == (("A", "B"), ("A", "C"), ("B", "A"))

    def test_singleton(self):
        snapshot = NetworkSnapshot(period=1, flows=(Flow("A", "B", 1.0),))
        index = index_flows(snapshot)
        assert index.dyads == (("A", "B"),)
        assert index.n == 1

    def test_permutation_invariance(self):
        flows = [Flow("A", "B", 1.0), Flow("C", "A", 2.0), Flow("B", "C", 3.0)]
        a = index_flows(NetworkSnapshot(period=1, flows=tuple(flows)))
        b = index_flows(NetworkSnapshot(period=1, flows=tuple(reversed(flows))))
        assert a == b

    def test_empty_snapshot_rejected(self):
        # A flow-less period is representable, but cannot be indexed/fitted.
        snapshot = NetworkSnapshot(period=7, flows=())
        assert snapshot.n_flows == 0
        with pytest.raises(PanelError, match="no flows"):
            index_flows(snapshot)

    def test_index_length_matches_flows(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            nodes = [f"N{k}" for k in range(int(rng.integers(2, 7)))]
            pairs = [(a, b) for a in nodes for b in nodes if a != b]
            rng.shuffle(pairs)
            take = pairs[: int(rng.integers(1, len(pairs) + 1))]
            snapshot = NetworkSnapshot(
                period=1, flows=tuple(Flow(a, b, 1.0) for a, b in take)
            )
            assert index_flows(snapshot).n == snapshot.n_flows

    def test_position_lookup(self):
        snapshot = NetworkSnapshot(
            period=1, flows=(Flow("A", "B", 1.0), Flow("B", "A", 2.0))
        )
        index = index_flows(snapshot)
        assert index.position(("B", "A")) == 1
        with pytest.raises(PanelError, match="not in index"):
            index.position(("A", "C"))


def test_log_flow_vector():
    snapshot = NetworkSnapshot(
        period=1, flows=(Flow("B", "A", np.e), Flow("A", "B", 1.0))
    )
    index = index_flows(snapshot)
    np.testing.assert_allclose(log_flow_vector(snapshot, index), [0.0, 1.0])


def test_log_flow_vector_period_mismatch():
    snapshot = NetworkSnapshot(period=1, flows=(Flow("A", "B", 1.0),))
    index = FlowIndex(period=2, dyads=(("A", "B"),))
    with pytest.raises(PanelError, match="period"):
        log_flow_vector(snapshot, index)


def test_round_trip(tmp_path):
    rng = np.random.default_rng(11)
    nodes = [f"N{k:02d}" for k in range(6)]
    roster = NodeRoster(
        entries=tuple(RosterEntry(node, 1, 10) for node in nodes)
    )
    snapshots = []
    for period in (1, 2, 5):
        pairs = [(a, b) for a in nodes for b in nodes if a != b]
        rng.shuffle(pairs)
        flows = tuple(
            Flow(a, b, float(rng.lognormal())) for a, b in pairs[:8]
        )
        snapshots.append(NetworkSnapshot(period=period, flows=flows))
    edge_path = tmp_path / "edges.csv"
    roster_path = tmp_path / "roster.csv"
    write_edge_csv(edge_path, snapshots)
    write_roster_csv(roster_path, roster)
    reloaded = load_panel(edge_path, roster_path)
    assert len(reloaded) == len(snapshots)
    for original, loaded in zip(snapshots, reloaded):
        assert loaded.period == original.period
        assert sorted(loaded.flows, key=lambda f: (f.sender, f.receiver)) == sorted(
            original.flows, key=lambda f: (f.sender, f.receiver)
        )


def test_flow_validation():
    with pytest.raises(PanelError, match="self-flow"):
        Flow("A", "A", 1.0)
    with pytest.raises(PanelError, match="nonpositive"):
        Flow("A", "B", -1.0)
