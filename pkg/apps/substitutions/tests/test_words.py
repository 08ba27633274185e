from unittest.mock import patch

from django.test import SimpleTestCase

from apps.common.errors import PreconditionError
from apps.substitutions.automaton import EvPeriodicPath, build_automaton, p_extreme, vershik
from apps.substitutions.fixtures import tribonacci
from apps.substitutions.words import (
    BiInfiniteWord,
    _parses,
    desubstitute,
    expansion,
    path_window,
    periodic_point,
    point_from_expansion,
    shift,
    word_expansion,
    words_with_expansion,
)


class BiInfiniteWordTestCase(SimpleTestCase):
    def setUp(self):
        self.substitution = tribonacci()
        self.automaton = build_automaton(self.substitution)
        self.word = self.substitution.alphabet.word
        p_min, p_max = p_extreme(self.automaton)
        self.fixed = p_min[0]
        self.left_a = p_max[0]
        self.point = periodic_point(self.substitution, self.left_a, self.fixed)

    def test_periodic_point_letters(self):
        self.assertEqual(self.point.letters(0, 13), self.word("abacabaabacab"))
        self.assertEqual(self.point.letters(-3, 3), self.word("abaaba"))
        self.assertEqual(self.point.render(3), "...aba.aba...")

    def test_shifted_letters(self):
        shifted = shift(self.point, 2)

        self.assertEqual(shifted.letters(-2, 2), self.point.letters(0, 4))

    def test_periodic_point_needs_extreme_halves(self):
        with self.assertRaises(PreconditionError):
            periodic_point(self.substitution, self.fixed, self.fixed)

    def test_word_with_undetermined_left_half(self):
        with self.assertRaises(PreconditionError):
            point_from_expansion(self.substitution, vershik(self.automaton, self.fixed))

    def test_path_window(self):
        path = EvPeriodicPath.periodic((self.automaton.edge(1, 0), self.automaton.edge(0, 1)))

        self.assertEqual(path_window(self.substitution, path, 0, 4), self.word("acab"))

    def test_desubstitute_periodic_point(self):
        edge, image = desubstitute(self.point)

        self.assertEqual(edge, self.automaton.edge(0, 0))
        self.assertEqual(image.left, self.left_a.behead(1))
        self.assertEqual(image.offset, 0)

    def test_desubstitution_needs_two_agreeing_radii(self):
        with patch("apps.substitutions.words._parses", wraps=_parses) as parses:
            desubstitute(self.point)

        windows = [len(call.args[1]) for call in parses.call_args_list]
        self.assertGreaterEqual(len(windows), 2)
        self.assertEqual(windows[1], 2 * windows[0])

    def test_expansion_of_periodic_point(self):
        self.assertEqual(expansion(self.point), self.fixed)

    def test_expansion_of_shifted_periodic_point(self):
        self.assertEqual(expansion(shift(self.point, -1)), self.left_a)

    def test_expansion_round_trip(self):
        path = EvPeriodicPath.periodic((self.automaton.edge(1, 0), self.automaton.edge(0, 1)))

        self.assertEqual(expansion(point_from_expansion(self.substitution, path)), path)

    def test_shift_follows_vershik(self):
        path = EvPeriodicPath.periodic((self.automaton.edge(1, 0), self.automaton.edge(0, 1)))
        word = BiInfiniteWord(self.substitution, path)

        self.assertEqual(shift(word, 1), BiInfiniteWord(self.substitution, vershik(self.automaton, path)))
        self.assertEqual(shift(word, 1).letters(-3, 3), word.letters(-2, 4))


class WordsWithExpansionTestCase(SimpleTestCase):
    def setUp(self):
        self.substitution = tribonacci()
        self.automaton = build_automaton(self.substitution)
        p_min, p_max = p_extreme(self.automaton)
        self.fixed = p_min[0]
        self.left_a = p_max[0]
        self.point = periodic_point(self.substitution, self.left_a, self.fixed)

    def test_path_with_prefixes_and_suffixes(self):
        path = EvPeriodicPath.periodic((self.automaton.edge(1, 0), self.automaton.edge(0, 1)))

        self.assertEqual(words_with_expansion(self.substitution, path), [point_from_expansion(self.substitution, path)])

    def test_path_in_p_max(self):
        self.assertEqual(words_with_expansion(self.substitution, self.left_a), [shift(self.point, -1)])

    def test_path_ending_in_p_min(self):
        words = words_with_expansion(self.substitution, vershik(self.automaton, self.fixed))

        self.assertEqual(len(words), 3)
        self.assertIn(shift(self.point, 1), words)
        self.assertEqual({word.letters(0, 20) for word in words}, {self.point.letters(1, 21)})

    def test_word_expansion_of_shifted_periodic_points(self):
        self.assertEqual(word_expansion(self.point), self.fixed)
        self.assertEqual(word_expansion(shift(self.point, 1)), vershik(self.automaton, self.fixed))
        self.assertEqual(word_expansion(shift(self.point, -1)), self.left_a)
