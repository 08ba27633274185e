from django.test import SimpleTestCase

from apps.common.errors import PreconditionError
from apps.substitutions.automaton import (
    EvPeriodicPath,
    FinitePath,
    build_automaton,
    co_vershik,
    finite_paths,
    p_extreme,
    path_prefix,
    path_suffix,
    vershik,
    vershik_power,
)
from apps.substitutions.fixtures import tribonacci


class PrefixSuffixAutomatonTestCase(SimpleTestCase):
    def setUp(self):
        self.substitution = tribonacci()
        self.automaton = build_automaton(self.substitution)
        self.word = self.substitution.alphabet.word
        # a <-(ε,b)- a, b <-(a,ε)- a, a <-(ε,c)- b, c <-(a,ε)- b, a <-(ε,ε)- c
        self.aa = self.automaton.edge(0, 0)
        self.ba = self.automaton.edge(0, 1)
        self.ab = self.automaton.edge(1, 0)
        self.cb = self.automaton.edge(1, 1)
        self.ac = self.automaton.edge(2, 0)

    def test_edges(self):
        self.assertEqual(len(self.automaton), 5)
        self.assertEqual(self.ba.prefix, self.word("a"))
        self.assertEqual(self.ab.suffix, self.word("c"))
        self.assertEqual(self.automaton.incoming[0], (self.aa, self.ab, self.ac))
        self.assertEqual(self.cb.render(self.substitution), "c<-(a,ε)-b")

    def test_path_prefix_and_suffix(self):
        path = (self.aa, self.ab, self.ba)

        self.assertEqual(path_prefix(self.substitution, path), self.word("abac"))
        self.assertEqual(path_suffix(self.substitution, path), self.word("ba"))

    def test_path_words_rebuild_the_image(self):
        for path in finite_paths(self.automaton, 4):
            self.assertEqual(
                path.prefix(self.substitution) + (path.end,) + path.suffix(self.substitution),
                self.substitution.iterate((path.beginning,), 4),
            )

    def test_finite_paths_count(self):
        self.assertEqual(len(finite_paths(self.automaton, 3)), 17)
        self.assertEqual(len(finite_paths(self.automaton, 3, end=0)), 9)

    def test_broken_chain(self):
        with self.assertRaises(PreconditionError):
            FinitePath((self.aa, self.ac))

    def test_normalization(self):
        cycle = (self.aa,)
        self.assertEqual(EvPeriodicPath.of((self.aa, self.aa), (self.aa, self.aa)), EvPeriodicPath((), cycle))
        self.assertEqual(
            EvPeriodicPath.of((self.ab, self.ba, self.ab), (self.ba, self.ab)),
            EvPeriodicPath((), (self.ab, self.ba)),
        )

    def test_behead(self):
        path = EvPeriodicPath.of((self.ba,), (self.aa,))

        self.assertEqual(path.behead(1), EvPeriodicPath((), (self.aa,)))
        self.assertEqual(path.behead(5), EvPeriodicPath((), (self.aa,)))
        self.assertEqual(len(path.tails()), 2)

    def test_p_extreme(self):
        p_min, p_max = p_extreme(self.automaton)

        self.assertEqual(p_min, (EvPeriodicPath((), (self.aa,)),))
        self.assertEqual(len(p_max), 3)
        self.assertEqual(p_max[0], EvPeriodicPath((), (self.ac, self.cb, self.ba)))
        self.assertTrue(all(not path.has_suffixes for path in p_max))

    def test_vershik_on_finite_path(self):
        path = FinitePath((self.aa, self.aa))

        self.assertEqual(vershik(self.automaton, path), FinitePath((self.ba, self.aa)))
        self.assertEqual(co_vershik(self.automaton, FinitePath((self.ba, self.aa))), path)

    def test_vershik_carries(self):
        # ε suffix on the first edge pushes the successor one level up
        path = FinitePath((self.ac, self.cb, self.ba, self.aa))

        self.assertEqual(vershik(self.automaton, path), FinitePath((self.aa, self.aa, self.ab, self.ba)))

    def test_vershik_enumerates_images_in_order(self):
        paths = [FinitePath((self.aa, self.aa, self.aa))]
        while True:
            try:
                paths.append(vershik(self.automaton, paths[-1]))
            except PreconditionError:
                break

        self.assertEqual(tuple(path.end for path in paths), self.substitution.iterate((0,), 3))

    def test_vershik_inverts_co_vershik_on_infinite_paths(self):
        p_min, p_max = p_extreme(self.automaton)
        fixed = p_min[0]
        shifted = vershik(self.automaton, fixed)

        self.assertEqual(shifted, EvPeriodicPath((self.ba,), (self.aa,)))
        self.assertEqual(co_vershik(self.automaton, shifted), fixed)
        self.assertEqual(vershik_power(self.automaton, fixed, 5), vershik_power(self.automaton, shifted, 4))
        self.assertEqual(vershik_power(self.automaton, vershik_power(self.automaton, fixed, 7), -7), fixed)

    def test_vershik_undefined_on_p_max(self):
        _, p_max = p_extreme(self.automaton)

        with self.assertRaises(PreconditionError):
            vershik(self.automaton, p_max[0])

    def test_co_vershik_undefined_on_p_min(self):
        p_min, _ = p_extreme(self.automaton)

        with self.assertRaises(PreconditionError):
            co_vershik(self.automaton, p_min[0])
