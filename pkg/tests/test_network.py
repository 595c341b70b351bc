import numpy as np
import pytest

from aquafront.errors import (
    DanglingReference,
    DuplicateId,
    InvalidNetwork,
    MalformedRecord,
    NonAscendingDiameter,
    NonContiguousIndex,
    ParseError,
    UnknownSection,
)
from aquafront.network import (
    DesignVector,
    NetworkConfig,
    OptionTable,
    config_for,
    format_cost_table,
    parse_cost_table,
    parse_inp,
    round_genes,
    round_to_indices,
    serialize_inp,
    table_from_rows,
)

MINIMAL = """\
[RESERVOIRS]
R1 100
[JUNCTIONS]
J1 50 0.1
[PIPES]
P1 R1 J1 1000 300 130
[END]
"""

COSTS = "index,diameter_mm,unit_cost\n0,200,40\n1,300,70\n2,400,110\n"


def config():
    return NetworkConfig(option_tables={"std": parse_cost_table(COSTS)}, default_table="std", min_head=20.0)


class TestParseInp:
    def test_minimal_counts(self):
        net = parse_inp(MINIMAL, config())
        assert (len(net.reservoirs), len(net.junctions), len(net.pipes)) == (1, 1, 1)
        assert net.n_real == 1
        assert net.reservoirs[0].head == 100.0
        assert net.junctions[0].demand == pytest.approx(0.1)

    def test_dangling_reference(self):
        with pytest.raises(DanglingReference) as err:
            parse_inp(MINIMAL.replace("P1 R1 J1", "P1 R1 J9"), config())
        assert err.value.line == 6

    def test_comments_are_noops(self):
        commented = "; header\n" + MINIMAL.replace("[PIPES]\n", "[PIPES]\n;id n1 n2\n  ; indented\n")
        commented = commented.replace("J1 50 0.1", "J1 50 0.1 ; trailing")
        a, b = parse_inp(MINIMAL, config()), parse_inp(commented, config())
        assert a.junctions == b.junctions and a.pipes == b.pipes and a.reservoirs == b.reservoirs

    def test_unknown_section(self):
        with pytest.raises(UnknownSection):
            parse_inp(MINIMAL + "[CURVES]\nC1 1 2\n", config())

    def test_ignored_sections(self):
        text = "[TITLE]\nsmall one\n[TIMES]\nDuration 0\n[REPORT]\nStatus No\n" + MINIMAL
        net = parse_inp(text, config())
        assert net.title == "small one"

    def test_duplicate_node(self):
        with pytest.raises(DuplicateId):
            parse_inp(MINIMAL.replace("J1 50 0.1", "J1 50 0.1\nR1 40 0.0"), config())

    def test_no_reservoir(self):
        text = "[JUNCTIONS]\nJ1 50 0.1\nJ2 40 0\n[PIPES]\nP1 J1 J2 100 300 130\n"
        with pytest.raises(InvalidNetwork):
            parse_inp(text, config())

    def test_disconnected_junction(self):
        text = MINIMAL.replace("J1 50 0.1", "J1 50 0.1\nJ2 50 0.1")
        with pytest.raises(InvalidNetwork):
            parse_inp(text, config())

    def test_short_record(self):
        with pytest.raises(MalformedRecord) as err:
            parse_inp(MINIMAL.replace("P1 R1 J1 1000 300 130", "P1 R1 J1"), config())
        assert "line 6" in str(err.value)

    def test_non_positive_length(self):
        with pytest.raises(ParseError):
            parse_inp(MINIMAL.replace("1000 300", "0 300"), config())

    def test_units_conversion(self):
        text = "[OPTIONS]\nUnits LPS\n" + MINIMAL.replace("J1 50 0.1", "J1 50 100")
        net = parse_inp(text, config())
        assert net.junctions[0].demand == pytest.approx(0.1)

    def test_fixed_pipe_keeps_inp_diameter(self):
        net = parse_inp(MINIMAL, NetworkConfig(min_head=20.0))
        assert net.n_real == 0
        assert net.diameters([])[0] == pytest.approx(0.3)


class TestRoundTrip:
    @pytest.mark.parametrize("name", ["one_pipe", "tiny3", "twoloop8"])
    def test_serialize_parse(self, name, request):
        net = request.getfixturevalue(name)
        again = parse_inp(serialize_inp(net), config_for(net))
        assert again.junctions == net.junctions
        assert again.reservoirs == net.reservoirs
        assert again.pipes == net.pipes
        np.testing.assert_array_equal(again.option_counts, net.option_counts)


class TestCostTable:
    def test_mm_to_m(self):
        t = table_from_rows([(0, 304.8, 45.73), (1, 406.4, 70.4)])
        assert len(t) == 2
        assert t.diameters == pytest.approx((0.3048, 0.4064))
        assert t.unit_costs == (45.73, 70.4)

    def test_gap_in_indices(self):
        with pytest.raises(NonContiguousIndex):
            table_from_rows([(0, 300, 50), (2, 400, 70)])

    def test_absent_pipe_option(self):
        t = table_from_rows([(0, 0, 0), (1, 300, 50)])
        assert t.has_absent_option
        assert t.diameters[0] == 0.0

    def test_non_ascending(self):
        with pytest.raises(NonAscendingDiameter):
            table_from_rows([(0, 300, 50), (1, 300, 70)])

    def test_unordered_rows_sorted_by_index(self):
        t = table_from_rows([(1, 400, 70), (0, 300, 50)])
        assert t.unit_costs == (50.0, 70.0)

    def test_csv_round_trip(self):
        t = parse_cost_table(COSTS)
        assert parse_cost_table(format_cost_table(t)) == t

    def test_bad_header(self):
        with pytest.raises(MalformedRecord):
            parse_cost_table("i,d,c\n0,1,2\n")

    def test_direct_table(self):
        with pytest.raises(NonAscendingDiameter):
            OptionTable((0.3, 0.2), (1.0, 2.0))


class TestRounding:
    def test_half_rounds_up(self):
        assert round_genes(np.array([0.4, 2.5, 4.9]), np.full(3, 5.0)).tolist() == [0, 3, 5]

    def test_integral_unchanged(self):
        assert round_genes(np.array([0.0, 3.0, 5.0]), np.full(3, 5.0)).tolist() == [0, 3, 5]

    def test_max_index(self):
        assert round_genes(np.array([5.0]), np.array([5.0])).tolist() == [5]

    def test_design_vector(self):
        d = DesignVector(np.array([0.4, 2.5, 4.9]), np.full(3, 5.0))
        assert round_to_indices(d) == [0, 3, 5]

    def test_out_of_bounds_rejected(self):
        with pytest.raises(ValueError):
            DesignVector(np.array([5.5]), np.array([5.0]))
