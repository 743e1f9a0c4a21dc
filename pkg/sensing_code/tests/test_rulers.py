"""
标尺构造、差集校验与文件解析测试
"""
import pytest
from pydantic import ValidationError

from sensing_code.errors import DomainError, RulerParseError
from sensing_code.gf import is_prime_power
from sensing_code.rulers import (
    Ruler,
    bose_chowla,
    difference_coarray,
    difference_multiset,
    format_ruler,
    infer_q,
    is_golomb,
    parse_ruler,
    ula,
    verify_perfect_difference,
)

SMALL_PRIME_POWERS = [q for q in range(2, 51) if is_prime_power(q)]


class TestBoseChowla:
    def test_q2(self):
        r = bose_chowla(2)
        assert r.positions == (1, 2)
        assert r.modulus == 3
        assert r.label == "bose-chowla(2)"
        assert r.construction_q == 2

    def test_q3(self):
        r = bose_chowla(3)
        assert r.positions == (1, 6, 7)
        assert r.modulus == 8

    @pytest.mark.parametrize("q", SMALL_PRIME_POWERS)
    def test_perfect_difference(self, q):
        r = bose_chowla(q)
        assert r.M == q
        assert r.modulus == q * q - 1
        assert 1 <= r.positions[0] and r.positions[-1] <= q * q - 2
        report = verify_perfect_difference(r, q)
        assert report.ok, report.reason
        assert report.support_size == q * (q - 1)
        assert is_golomb(r)

    @pytest.mark.parametrize("q", [1, 6, 10, 12])
    def test_not_prime_power(self, q):
        with pytest.raises(DomainError):
            bose_chowla(q)


class TestUla:
    def test_positions(self):
        r = ula(3, 8)
        assert r.positions == (0, 1, 2)
        assert r.modulus == 8
        assert r.label == "ula"
        assert r.construction_q is None

    def test_single_sensor(self):
        assert ula(1, 2).positions == (0,)

    @pytest.mark.parametrize("M,N", [(4, 3), (0, 5), (1, 1)])
    def test_domain(self, M, N):
        with pytest.raises(DomainError):
            ula(M, N)

    def test_lag_multiplicity(self):
        M, N = 6, 35
        counts = difference_multiset(ula(M, N)).counts
        for k in range(1, M):
            assert counts[k] == M - k
            assert counts[N - k] == M - k


class TestDifferenceMultiset:
    def test_ula_example(self):
        ms = difference_multiset(ula(3, 8))
        assert ms.counts == {1: 2, 2: 1, 7: 2, 6: 1}
        assert ms.support() == [1, 2, 6, 7]

    @pytest.mark.parametrize("r", [bose_chowla(5), ula(7, 48), Ruler(positions=(0, 3, 4, 9), modulus=20)])
    def test_symmetric_and_total(self, r):
        ms = difference_multiset(r)
        assert ms.total == r.M * (r.M - 1)
        for res, count in ms.counts.items():
            assert ms.counts[(-res) % r.modulus] == count

    def test_coarray(self):
        assert difference_coarray(ula(3, 8)) == [-2, -1, 1, 2]
        assert difference_coarray(Ruler(positions=(0, 1, 3), modulus=8)) == [-3, -2, -1, 1, 2, 3]


class TestVerify:
    def test_ula_fails(self):
        report = verify_perfect_difference(ula(3, 8), 3)
        assert not report.ok
        assert report.witness == 1

    def test_modulus_mismatch(self):
        with pytest.raises(DomainError):
            verify_perfect_difference(ula(3, 9), 3)

    def test_golomb(self):
        assert is_golomb(Ruler(positions=(0, 1, 3), modulus=8))
        assert not is_golomb(ula(3, 8))

    def test_infer_q(self):
        assert infer_q(bose_chowla(4)) == 4
        assert infer_q(ula(3, 10)) is None
        # 35 = 6^2 - 1，6 不是素数幂
        assert infer_q(ula(3, 35)) is None


class TestRulerModel:
    def test_sorted(self):
        assert Ruler(positions=(5, 0, 2), modulus=8).positions == (0, 2, 5)

    @pytest.mark.parametrize("kwargs", [
        {"positions": (0, 8), "modulus": 8},
        {"positions": (1, 1), "modulus": 8},
        {"positions": (), "modulus": 8},
        {"positions": (0,), "modulus": 1},
        {"positions": (0,), "modulus": 8, "label": "golomb"},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValidationError):
            Ruler(**kwargs)


class TestParse:
    def test_basic(self):
        r = parse_ruler("# my array\nN=8\n1 6 7\n")
        assert r.positions == (1, 6, 7)
        assert r.modulus == 8
        assert r.label == "custom"

    def test_blank_and_comment_lines(self):
        r = parse_ruler("\n# a\n\nN = 24\n# b\n0 3 4\n\n")
        assert r.positions == (0, 3, 4)

    def test_format_then_parse(self):
        original = bose_chowla(5)
        parsed = parse_ruler(format_ruler(original))
        assert parsed.positions == original.positions
        assert parsed.modulus == original.modulus

    def test_format_layout(self):
        assert format_ruler(bose_chowla(3)) == "# bose-chowla(3)\nN=8\n1 6 7\n"

    @pytest.mark.parametrize("text,lineno", [
        ("", 1),
        ("N=8\n", 2),
        ("M=8\n1 2\n", 1),
        ("N=8\n1 x 3\n", 2),
        ("N=8\n1 1 3\n", 2),
        ("N=8\n1 3 8\n", 2),
        ("N=8\n3 1\n", 2),
        ("# c\nN=8\n1 -2\n", 3),
        ("N=8\n1 2\n3 4\n", 3),
        ("N=1\n0\n", 1),
    ])
    def test_errors(self, text, lineno):
        with pytest.raises(RulerParseError) as exc:
            parse_ruler(text)
        assert exc.value.lineno == lineno
        assert isinstance(exc.value, DomainError)
