import json
from dataclasses import replace

import networkx as nx
import sympy
from django.test import SimpleTestCase
from parameterized import parameterized

from apps.common.caps import Caps
from apps.common.errors import CapExceededError, PreconditionError
from apps.contour.conditions import check_conditions, satisfy_valence, triple_order, valence_failures
from apps.contour.iet import extend_by_pmax, induced_iet
from apps.contour.orders import INITIAL, PatchGraph, assign_orders, planar_orders, same_cycle, search_orders
from apps.contour.substitution import contour_iterates, contour_spectrum, contour_substitution, tile_arcs
from apps.geometry.algebra import eigen_data, t
from apps.singular.analysis import analyze_singular
from apps.substitutions.fixtures import example_one, tribonacci
from apps.trees.metric import branch_point_expansions, refine_simplicial
from apps.trees.rule import build_tree_substitution

CHI = {
    "a12": ["a23", "c11", "b21"],
    "a23": ["b12", "a31"],
    "a31": ["a12"],
    "b12": ["a12", "a23"],
    "b21": ["a31"],
    "c11": ["b21", "b12"],
}
DUAL = {
    "a12": ["a31", "b12"],
    "a23": ["a12", "b12"],
    "a31": ["a23", "b21"],
    "b12": ["a23", "c11"],
    "b21": ["a12", "c11"],
    "c11": ["a12"],
}
EXTENDED = {
    "a14": ["a23", "c12"],
    "a42": ["c21", "b21"],
    "a23": ["b12", "a31"],
    "a31": ["a14", "a42"],
    "b13": ["a14"],
    "b32": ["a42", "a23"],
    "b21": ["a31"],
    "c12": ["b21", "b13"],
    "c21": ["b32"],
}


def named(contour, images) -> dict[str, list[str]]:
    return {contour.name(arc): [contour.name(found) for found in word] for arc, word in images.items()}


class TribonacciContourTestCase(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.substitution = tribonacci()
        cls.eigen = eigen_data(cls.substitution)
        cls.rule = refine_simplicial(build_tree_substitution(analyze_singular(cls.substitution)))
        cls.orders = planar_orders(cls.rule, cls.eigen, branch_point_expansions(cls.rule))
        cls.contour = contour_substitution(cls.rule, cls.orders)
        cls.spectrum = contour_spectrum(cls.contour, cls.eigen)

    def test_arcs(self):
        self.assertEqual(sorted(self.contour.name(arc) for arc in self.contour.arcs), sorted(CHI))
        self.assertEqual([len(tile_arcs(self.rule, self.orders, key)) for key in self.rule.keys], [3, 2, 1])

    def test_contour_of_w(self):
        names = [self.contour.name(arc) for arc in self.contour.initial]

        self.assertEqual(len(names), 6)
        self.assertTrue(same_cycle(names, ["a12", "a23", "c11", "b21", "b12", "a31"]))

    def test_contour_substitution(self):
        self.assertEqual(named(self.contour, self.contour.images), CHI)

    def test_dual_substitution(self):
        self.assertEqual(named(self.contour, self.contour.dual), DUAL)

    def test_dual_covers_the_substitution(self):
        for arc in self.contour.arcs:
            self.assertEqual(
                self.contour.forget(self.contour.dual[arc]), self.substitution.images[self.contour.letter(arc)]
            )

    def test_dual_matrix_is_the_transpose(self):
        self.assertEqual(self.contour.substitution.incidence.T, self.contour.dual_substitution.incidence)

    def test_characteristic_polynomial(self):
        self.assertEqual(self.spectrum.char_poly, (1, 0, -1, -4, -1, 0, 1))
        self.assertEqual(sorted(self.spectrum.factors), [((1, -1, -1, -1), 1), ((1, 1, 1, -1), 1)])
        self.assertTrue(self.spectrum.primitive)
        self.assertAlmostEqual(self.spectrum.eigenvalue, self.eigen.report.eigenvalue, places=8)

    def test_lengths(self):
        lengths = self.spectrum.lengths
        value = self.eigen.number_field.element(t)

        self.assertTrue(all(float(length) > 0 for length in lengths.values()))
        self.assertEqual(sum(lengths.values(), self.eigen.number_field.element(0)), 1)
        for arc in self.contour.arcs:
            image = sum((lengths[found] for found in self.contour.images[arc]), self.eigen.number_field.element(0))
            self.assertEqual(image, value * lengths[arc])

    @parameterized.expand([(times,) for times in range(4)])
    def test_iterates_follow_the_matrix(self, times):
        word = contour_iterates(self.contour, times)
        substitution = self.contour.substitution
        counts = sympy.Matrix(substitution.abelianize(self.contour.word(self.contour.initial)))
        expected = substitution.incidence**times * counts

        self.assertEqual(sympy.Matrix(substitution.abelianize(self.contour.word(word))), expected)

    def test_negative_iterate(self):
        with self.assertRaises(PreconditionError):
            contour_iterates(self.contour, -1)

    def test_conditions_hold(self):
        report = check_conditions(self.rule, self.orders)

        self.assertTrue(report.passed)
        self.assertTrue(all(result.checked for result in report.results))
        self.assertEqual(sorted(report.as_dict()), ["C1", "C2", "C3", "C4", "C5"])

    def test_reversed_branch_point_breaks_the_triples(self):
        tile = self.rule.prototiles[0]
        center = next(vertex for vertex in tile.vertices if isinstance(vertex, str))
        tiles = {key: dict(orders) for key, orders in self.orders.tiles.items()}
        tiles[0][center] = tuple(reversed(tiles[0][center]))

        report = check_conditions(self.rule, replace(self.orders, tiles=tiles))

        self.assertFalse(report["C4"].passed)
        self.assertTrue(report["C4"].witnesses)

    def test_triple_order_of_aligned_nodes(self):
        graph = PatchGraph(self.rule, self.rule.initial)
        rotation = self.orders.rotation(graph, INITIAL)
        leaves = [node for node, degree in graph.graph.degree if degree == 1]
        middle = nx.shortest_path(graph.graph, leaves[0], leaves[1])[1]

        self.assertEqual(triple_order(graph, rotation, leaves[0], middle, leaves[1]), ("aligned", 1))

    def test_explicit_orders_round_trip(self):
        data = json.loads(json.dumps(self.orders.as_dict(self.rule)))

        restored = assign_orders(self.rule, mode="explicit", data=data)

        self.assertEqual(data["mode"], "planar")
        self.assertEqual(contour_substitution(self.rule, restored).images, self.contour.images)

    def test_unknown_order_mode(self):
        with self.assertRaises(PreconditionError):
            assign_orders(self.rule, mode="spiral")
        with self.assertRaises(PreconditionError):
            assign_orders(self.rule, mode="planar")

    def test_order_search_cap(self):
        with self.assertRaises(CapExceededError) as context:
            search_orders(self.rule, lambda orders: True, Caps(order_assignments=1))

        self.assertEqual(context.exception.cap, "ORDER_ASSIGNMENTS")

    def test_valence_already_holds(self):
        self.assertEqual(valence_failures(self.rule), [])
        self.assertIs(satisfy_valence(self.rule), self.rule)

    def test_extension(self):
        circle = extend_by_pmax(self.contour, self.spectrum, self.eigen)

        self.assertEqual(named(circle.contour, circle.contour.images), EXTENDED)
        self.assertEqual(sum(circle.lengths.values(), self.eigen.number_field.element(0)), 1)
        extended = circle.contour
        for arc in extended.arcs:
            self.assertEqual(extended.forget(extended.dual[arc]), self.substitution.images[extended.letter(arc)])

    def test_induced_rotation(self):
        circle = extend_by_pmax(self.contour, self.spectrum, self.eigen)

        iet = induced_iet(circle, self.eigen)

        self.assertEqual(
            [[circle.contour.name(arc) for arc in piece.arcs] for piece in iet.pieces],
            [["a31", "a14"], ["a42", "a23"], ["c12"], ["c21"], ["b21", "b13"], ["b32"]],
        )
        self.assertEqual(sum((piece.length for piece in iet.pieces[1:]), iet.pieces[0].length), 1)
        self.assertEqual(len(iet.as_dict()["pieces"]), 6)

    def test_induced_rotation_moves_points_by_pieces(self):
        circle = extend_by_pmax(self.contour, self.spectrum, self.eigen)
        iet = induced_iet(circle, self.eigen)

        for piece in iet.pieces:
            middle = float(piece.start) + float(piece.length) / 2
            self.assertAlmostEqual(iet(middle), (middle + float(piece.rotation)) % 1)


class ExampleOneContourTestCase(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.substitution = example_one()
        cls.eigen = eigen_data(cls.substitution)
        cls.rule = refine_simplicial(build_tree_substitution(analyze_singular(cls.substitution)))

    def test_arcs(self):
        orders = planar_orders(self.rule, self.eigen)

        self.assertEqual(sum(len(tile_arcs(self.rule, orders, key)) for key in self.rule.keys), 9)

    def test_dual_covers_the_substitution(self):
        contour = contour_substitution(self.rule, planar_orders(self.rule, self.eigen))

        for arc in contour.arcs:
            self.assertEqual(contour.forget(contour.dual[arc]), self.substitution.images[contour.letter(arc)])

    def test_dual_incidence_is_transposed(self):
        contour = contour_substitution(self.rule, planar_orders(self.rule, self.eigen))

        self.assertEqual(len(contour.arcs), 9)
        self.assertEqual(contour.substitution.incidence.T, contour.dual_substitution.incidence)
