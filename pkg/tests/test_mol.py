import random

import pytest

from farm.mol import (
    AROMATIC,
    DOUBLE,
    SINGLE,
    SmilesSyntaxError,
    ValenceError,
    isomorphic,
    parse_components,
    parse_smiles,
    perceive_rings,
    write_smiles,
)
from conftest import permute_atoms


class TestParse:
    def test_methane(self, mol_of):
        m = mol_of("C")
        assert len(m) == 1
        assert m.atoms[0].element == "C"
        assert m.atoms[0].implicit_h == 4
        assert not m.bonds

    def test_benzene(self, mol_of):
        m = mol_of("c1ccccc1")
        assert len(m) == 6
        assert all(a.is_aromatic for a in m.atoms)
        assert all(a.total_h == 1 for a in m.atoms)
        assert all(b.order == AROMATIC for b in m.bonds)
        assert len(m.bonds) == 6

    def test_acetic_acid_hand_parse(self, mol_of):
        # CC(=O)O: C-C single, C=O double, C-O single; hydroxyl O has one H
        m = mol_of("CC(=O)O")
        assert len(m) == 4
        orders = sorted(b.order for b in m.bonds)
        assert orders == [SINGLE, SINGLE, DOUBLE]
        hydroxyl = [a for a in m.atoms if a.element == "O" and a.total_h == 1]
        assert len(hydroxyl) == 1
        carbonyl = [a for a in m.atoms if a.element == "O" and a.total_h == 0]
        assert len(carbonyl) == 1

    def test_bracket_atoms(self, mol_of):
        m = mol_of("[NH4+]")
        a = m.atoms[0]
        assert (a.element, a.formal_charge, a.total_h) == ("N", 1, 4)
        m = mol_of("[O-]")
        assert m.atoms[0].formal_charge == -1
        m = mol_of("[Fe+2]")
        assert m.atoms[0].formal_charge == 2

    def test_isotope_parsed_and_dropped(self, mol_of):
        m = mol_of("[13CH4]")
        assert m.atoms[0].element == "C"
        assert m.atoms[0].total_h == 4

    def test_stereo_marks_dropped(self, mol_of):
        m1 = mol_of("N[C@@H](C)C(=O)O")
        m2 = mol_of("NC(C)C(=O)O")
        assert isomorphic(m1, m2)
        m3 = mol_of("F/C=C/F")
        assert sum(b.order == DOUBLE for b in m3.bonds) == 1

    def test_percent_ring_closure(self, mol_of):
        assert isomorphic(mol_of("C%10CCCCC%10"), mol_of("C1CCCCC1"))

    def test_multi_component(self):
        parts = parse_components("[Na+].[Cl-]")
        assert len(parts) == 2
        single = parse_smiles("[Na+].[Cl-]")
        assert isinstance(single, list) and len(single) == 2

    def test_biphenyl_without_dash(self, mol_of):
        # the bare bond between the rings is demoted to single
        m = mol_of("c1ccc(c2ccccc2)cc1")
        assert isomorphic(m, mol_of("c1ccc(-c2ccccc2)cc1"))

    @pytest.mark.parametrize(
        "bad",
        ["", "C(", "C)", "C1CC", "C==C", "C%1", "[Cx]", "1CC", "(C)", "C.=C"],
    )
    def test_syntax_errors(self, bad):
        with pytest.raises(SmilesSyntaxError):
            parse_components(bad)

    def test_error_position(self):
        try:
            parse_components("CC1CC")
        except SmilesSyntaxError as exc:
            assert exc.position == 2
        else:
            pytest.fail("expected unmatched ring closure error")

    def test_strict_valence(self):
        with pytest.raises(ValenceError):
            parse_components("C(C)(C)(C)(C)C", strict=True)
        # lenient mode accepts and clamps implicit hydrogens
        m = parse_smiles("C(C)(C)(C)(C)C")
        assert m.atoms[0].implicit_h == 0


class TestWrite:
    def test_canonical_ethanol(self, mol_of):
        assert write_smiles(mol_of("OCC")) == write_smiles(mol_of("CCO"))
        assert write_smiles(mol_of("C(O)C")) == write_smiles(mol_of("CCO"))

    def test_benzene_roundtrip(self, mol_of):
        out = write_smiles(mol_of("c1ccccc1"))
        m2 = parse_smiles(out)
        assert len(m2) == 6 and all(a.is_aromatic for a in m2.atoms)

    def test_alanine_isomorphic_without_stereo(self, mol_of):
        m = mol_of("N[C@@H](C)C(=O)O")
        again = parse_smiles(write_smiles(m))
        assert isomorphic(m, again)

    def test_kekulized_not_rearomatized(self, mol_of):
        m = mol_of("C1=CC=CC=C1")
        assert not any(a.is_aromatic for a in m.atoms)
        again = parse_smiles(write_smiles(m))
        assert isomorphic(m, again)

    @pytest.mark.parametrize(
        "smiles",
        [
            "CC(=O)Oc1ccccc1C(=O)O",
            "CN1C=NC2=C1C(=O)N(C)C(=O)N2C",
            "[O-]S(=O)(=O)c1ccc(N=Nc2ccccc2)cc1",
            "OC1CC2CCC1C2",
            "c1cnc2[nH]ccc2c1",
            "CC(C)(C)OC(=O)NC(C)C(=O)O",
        ],
    )
    def test_roundtrip_isomorphic(self, smiles, mol_of):
        m = mol_of(smiles)
        again = parse_smiles(write_smiles(m))
        assert isomorphic(m, again)

    def test_corpus_roundtrip_and_h_conservation(self, corpus_sample):
        for smiles in corpus_sample:
            m = parse_smiles(smiles)
            out = write_smiles(m)
            again = parse_smiles(out)
            assert isomorphic(m, again), smiles
            assert m.total_hydrogens() == again.total_hydrogens(), smiles
            # idempotence: writing the reparse gives the same string
            assert write_smiles(again) == out, smiles

    def test_permutation_canonicality(self, corpus_sample):
        rng = random.Random(11)
        for smiles in corpus_sample[:80]:
            m = parse_smiles(smiles)
            reference = write_smiles(m)
            for _ in range(4):
                perm = list(range(len(m)))
                rng.shuffle(perm)
                assert write_smiles(permute_atoms(m, perm)) == reference, smiles


class TestRings:
    def test_benzene(self, mol_of):
        info = perceive_rings(mol_of("c1ccccc1"))
        assert [len(r) for r in info.rings] == [6]
        assert len(info.fused_systems) == 1

    def test_naphthalene_brute_force(self, mol_of):
        # two six-cycles sharing exactly two atoms, one fused system
        m = mol_of("c1ccc2ccccc2c1")
        info = perceive_rings(m)
        assert sorted(len(r) for r in info.rings) == [6, 6]
        shared = set(info.rings[0]) & set(info.rings[1])
        assert len(shared) == 2
        assert len(info.fused_systems) == 1

    def test_biphenyl_two_systems(self, mol_of):
        info = perceive_rings(mol_of("c1ccc(-c2ccccc2)cc1"))
        assert sorted(len(r) for r in info.rings) == [6, 6]
        assert len(info.fused_systems) == 2

    def test_spiro_shares_one_atom(self, mol_of):
        info = perceive_rings(mol_of("C1CCC2(CC1)CCCC2"))
        assert len(info.fused_systems) == 1

    def test_acyclic(self, mol_of):
        assert perceive_rings(mol_of("CCCCC")).rings == []

    def test_sssr_count_matches_cyclomatic(self, corpus_sample):
        for smiles in corpus_sample:
            m = parse_smiles(smiles)
            expected = len(m.bonds) - len(m) + 1  # connected components == 1
            assert len(m.rings.rings) == expected, smiles

    def test_norbornane_sssr(self, mol_of):
        # bicyclo[2.2.1]heptane: cyclomatic number 2, smallest rings are 5,5
        info = perceive_rings(mol_of("C1CC2CCC1C2"))
        assert sorted(len(r) for r in info.rings) == [5, 5]
