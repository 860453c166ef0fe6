"""Label-map construction and file round-trips."""

import pytest

from hierkit.errors import ParseError
from hierkit.labelmap import (
    LabelClass,
    LabelMap,
    from_members,
    read_label_map,
    write_label_map,
)


def sample_map():
    return from_members(
        members={"n02": {"n02", "n03"}, "n01": {"n01"}},
        assigned_counts={"n02": 12, "n01": 7},
        unassigned=[("n09", 4)],
        provenance="bottomup order=roll,bind,promote,subsample "
        "t_b=10 t_p=2 t_s=5 seed=1",
    )


class TestConstruction:
    def test_ids_follow_sorted_representatives(self):
        label_map = sample_map()
        assert [c.class_id for c in label_map.classes] == [0, 1]
        assert [c.representative for c in label_map.classes] == ["n01", "n02"]

    def test_members_sorted(self):
        label_map = sample_map()
        assert label_map.classes[1].members == ("n02", "n03")

    def test_totals(self):
        label_map = sample_map()
        assert label_map.total_assigned() == 19
        assert label_map.total_unassigned() == 4

    def test_class_of_synset(self):
        assert sample_map().class_of_synset() == {
            "n01": 0, "n02": 1, "n03": 1
        }


class TestRoundTrip:
    def test_write_read_identity(self):
        label_map = sample_map()
        text = write_label_map(label_map)
        parsed = read_label_map(text)
        assert parsed.classes == label_map.classes
        assert parsed.unassigned == label_map.unassigned
        assert parsed.provenance == label_map.provenance
        assert write_label_map(parsed) == text

    def test_empty_unassigned_section(self):
        label_map = LabelMap(
            classes=[
                LabelClass(
                    class_id=0,
                    representative="n01",
                    members=("n01",),
                    assigned_count=3,
                )
            ],
            provenance="topdown t_t=1 budget=1",
        )
        parsed = read_label_map(write_label_map(label_map))
        assert parsed.classes == label_map.classes
        assert parsed.unassigned == []

    def test_missing_header_rejected(self):
        with pytest.raises(ParseError):
            read_label_map("0\tn01\t3\tn01\n")

    def test_malformed_class_line_rejected(self):
        text = write_label_map(sample_map()) + "not\tenough\n"
        with pytest.raises(ParseError):
            read_label_map(text.replace("#UNASSIGNED\n", ""))

    def test_bad_count_reports_line(self):
        text = "# hierkit-labelmap v1 p\n0\tn01\tmany\tn01\n#UNASSIGNED\n"
        with pytest.raises(ParseError, match="line 2"):
            read_label_map(text)
