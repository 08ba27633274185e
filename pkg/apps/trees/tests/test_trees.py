import numpy as np
import pydot
from django.test import SimpleTestCase
from parameterized import parameterized

from apps.common.errors import PreconditionError
from apps.geometry.algebra import eigen_data
from apps.geometry.embedding import embed_patch
from apps.singular.analysis import analyze_singular
from apps.substitutions.automaton import EvPeriodicPath, build_automaton, finite_paths, p_extreme
from apps.substitutions.fixtures import example_one, tribonacci
from apps.trees.covering import adjacency_covering, prune
from apps.trees.export import patch_as_dict, patch_to_dot, rule_as_dict
from apps.trees.metric import branch_point_expansions, distance_matrix, refine_simplicial
from apps.trees.rule import add_gluing_point, build_tree_substitution, image_label, image_vertex, iterate
from apps.trees.tiles import Patch, TileInstance, is_tree, quotient, vertex_classes


class TribonacciTreeTestCase(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.substitution = tribonacci()
        cls.analysis = analyze_singular(cls.substitution)
        cls.rule = build_tree_substitution(cls.analysis)
        cls.refined = refine_simplicial(cls.rule)
        cls.automaton = build_automaton(cls.substitution)
        aa, ab, ba = cls.automaton.edge(0, 0), cls.automaton.edge(1, 0), cls.automaton.edge(0, 1)
        cb = cls.automaton.edge(1, 1)
        beta = (aa, ab, ba)
        cls.aa = aa
        cls.gamma_a = EvPeriodicPath.of((aa,), beta)
        cls.gamma_b = EvPeriodicPath.of((ba, aa), beta)
        cls.gamma_c = EvPeriodicPath.of((cb, ba, aa), beta)

    def test_images_of_the_prototiles(self):
        children = {key: [child.tile for child in self.rule.children[key]] for key in self.rule.keys}

        self.assertEqual(children, {0: [0, 1, 2], 1: [0], 2: [1]})
        self.assertEqual([len(self.rule.prototiles[key].gluing) for key in self.rule.keys], [3, 2, 1])

    def test_all_tiles_meet_at_one_point(self):
        union = vertex_classes(self.rule.prototiles, self.rule.initial)
        self.assertEqual(union[(0, self.gamma_a)], union[(1, self.gamma_b)])
        self.assertEqual(union[(0, self.gamma_a)], union[(2, self.gamma_c)])

        image = self.rule.image(0)
        union = vertex_classes(self.rule.prototiles, image)
        self.assertEqual(union[(0, self.gamma_a)], union[(1, self.gamma_b)])
        self.assertEqual(union[(0, self.gamma_a)], union[(2, self.gamma_c)])

    def test_vertex_map_labels(self):
        points = self.analysis.points

        for tail in (self.gamma_a, self.gamma_b, self.gamma_c):
            label = image_label(self.rule, points, tail.end, tail)
            self.assertEqual(points.render_label(label, points.by_tail[tail.behead(1)].point), "c^-1 P")

    def test_vertex_map_follows_the_tails(self):
        for key in self.rule.keys:
            for tail in self.rule.prototiles[key].gluing:
                for times in range(5):
                    address, image = image_vertex(self.rule, key, tail, times)
                    self.assertEqual(address, tail.edges(times))
                    self.assertEqual(image, tail.behead(times))

    def test_first_iterate(self):
        patch = iterate(self.rule, times=1)

        self.assertEqual(len(patch), 5)
        self.assertEqual(sorted(instance.tile for instance in patch.tiles), [0, 0, 0, 1, 2])

    def test_zero_iterate_is_the_initial_patch(self):
        self.assertEqual(iterate(self.rule, times=0), self.rule.initial)

    @parameterized.expand([(times,) for times in range(1, 6)])
    def test_tile_count_is_the_path_count(self, times):
        patch = iterate(self.rule, times=times)

        self.assertEqual(len(patch), len(finite_paths(self.automaton, times)))

    @parameterized.expand([(times,) for times in range(9)])
    def test_iterates_are_trees(self, times):
        patch = iterate(self.rule, times=times, check=False)

        self.assertTrue(is_tree(quotient(self.rule.prototiles, patch)))

    def test_inconsistent_gluing(self):
        first, second = sorted(self.rule.prototiles[0].gluing, key=EvPeriodicPath.sort_key)[:2]
        patch = Patch(
            (TileInstance(0, 0), TileInstance(1, 1)),
            (((0, first), (1, self.gamma_b)), ((0, second), (1, self.gamma_b))),
        )

        with self.assertRaises(PreconditionError):
            vertex_classes(self.rule.prototiles, patch)

    def test_distance_matrix(self):
        distances = distance_matrix(self.refined)

        self.assertEqual(len(distances.coordinates), 4)
        self.assertEqual(
            distances.matrix.tolist(),
            [[0, 0, 1, 1], [1, 0, 0, 0], [0, 1, 0, 1], [0, 1, 0, 0]],
        )
        value, _ = distances.dominant()
        self.assertGreater(value, 1)
        self.assertAlmostEqual(value**4 - 2 * value - 1, 0, places=8)

    def test_renormalized_distances_converge(self):
        distances = distance_matrix(self.refined)
        _, vector = distances.dominant()

        renormalized = distances.renormalized(np.ones(4), 400)

        self.assertTrue(np.allclose(renormalized, vector, atol=1e-9))

    def test_refinement(self):
        tile_a, tile_b, tile_c = (self.refined.prototiles[key] for key in self.refined.keys)

        self.assertEqual(tile_a.interior, ("x0",))
        self.assertEqual(len(tile_a.edges), 3)
        self.assertEqual(tile_a.graph.degree("x0"), 3)
        self.assertEqual(len(tile_b.edges), 1)
        self.assertEqual(tile_c, self.rule.prototiles[2])

    def test_refinement_is_idempotent(self):
        self.assertEqual(dict(refine_simplicial(self.refined).prototiles), dict(self.refined.prototiles))

    def test_branch_points(self):
        expansions = branch_point_expansions(self.refined)

        self.assertEqual(expansions[0], {"x0": EvPeriodicPath.periodic((self.aa,))})
        self.assertEqual(expansions[1], {})
        self.assertEqual(expansions[2], {})

    def test_adding_an_existing_tail(self):
        self.assertIs(add_gluing_point(self.rule, self.gamma_a), self.rule)

    def test_adding_the_maximal_paths(self):
        _, maximal = p_extreme(self.automaton)

        extended = add_gluing_point(self.rule, maximal[0])

        self.assertEqual([len(extended.prototiles[key].gluing) for key in extended.keys], [4, 3, 2])
        child, image = extended.follow(0, maximal[0])
        self.assertEqual(child.tile, 2)
        self.assertEqual(image, maximal[0].behead(1))
        self.assertTrue(is_tree(quotient(extended.prototiles, iterate(extended, times=3, check=False))))

    def test_pruning(self):
        pruned = prune(self.refined)
        covering = pruned.covering

        self.assertEqual(len(covering.alphabet), 6)
        self.assertEqual(sorted(covering.forgetful.values()), [0, 0, 0, 1, 1, 2])
        self.assertEqual(
            sorted(len(key.kept) for key in covering.alphabet if key.letter == 0),
            [1, 2, 3],
        )
        self.assertEqual(sorted(pruned.name(key) for key in pruned.keys), ["a", "a'", "a''", "b", "b'", "c"])
        for times in range(6):
            self.assertTrue(is_tree(quotient(pruned.prototiles, iterate(pruned, times=times, check=False))))

    def test_pruning_keeps_the_growth(self):
        value, _ = distance_matrix(self.refined).dominant()
        pruned_value, _ = distance_matrix(prune(self.refined)).dominant()

        self.assertAlmostEqual(value, pruned_value, places=8)

    def test_export(self):
        dot = patch_to_dot(self.rule, self.rule.initial)
        data = patch_as_dict(self.rule, iterate(self.rule, times=1))

        (graph,) = pydot.graph_from_dot_data(dot)
        self.assertEqual(graph.get_name().strip('"'), "patch")
        self.assertEqual(len(graph.get_edges()), 4)
        self.assertEqual(len(data["tiles"]), 5)
        self.assertEqual(len(rule_as_dict(self.rule)["prototiles"]), 3)


class ExampleOneTreeTestCase(SimpleTestCase):
    def test_images_of_the_prototiles(self):
        rule = build_tree_substitution(analyze_singular(example_one()))

        children = {key: sorted(child.tile for child in rule.children[key]) for key in rule.keys}

        self.assertEqual(children, {0: [0, 1], 1: [1, 2], 2: [0]})


class AdjacencyCoveringTestCase(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        substitution = tribonacci()
        cls.eigen = eigen_data(substitution)
        cls.rule = refine_simplicial(build_tree_substitution(analyze_singular(substitution)))
        cls.covered = adjacency_covering(cls.rule, cls.eigen)

    def test_cover_letters(self):
        covering = self.covered.covering

        self.assertTrue(covering.heuristic)
        self.assertEqual(sorted(covering.forgetful.values()), [0, 0, 0, 1, 1, 2])
        self.assertEqual(
            [sorted(key.neighbours) for key in covering.alphabet],
            [[0, 1, 2], [0, 1], [0], [0, 1, 2], [0, 1], [0, 1, 2]],
        )
        self.assertEqual(rule_as_dict(self.covered)["covering"]["heuristic"], True)

    def test_iterates_are_trees(self):
        for times in range(5):
            self.assertTrue(is_tree(quotient(self.covered.prototiles, iterate(self.covered, times=times, check=False))))

    def test_embedded_gluings_coincide(self):
        for times in range(3):
            embedding = embed_patch(self.covered, iterate(self.covered, times=times, check=False), self.eigen)
            self.assertEqual(embedding.mismatches, [])

    def test_covering_twice(self):
        with self.assertRaises(PreconditionError):
            adjacency_covering(self.covered, self.eigen)
