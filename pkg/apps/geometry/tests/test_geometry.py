import numpy as np
import sympy
from django.test import SimpleTestCase
from parameterized import parameterized

from apps.common.errors import PreconditionError
from apps.geometry.algebra import eigen_data, pisot_check, rational_vector
from apps.geometry.dual import Face, e1star_iterate, e1star_step
from apps.geometry.embedding import embed_patch
from apps.geometry.points import (
    ExactPoint,
    domain_exchange_step,
    finite_point,
    path_vector,
    phi,
    rauzy_cloud,
    strong_coincidence,
)
from apps.singular.analysis import analyze_singular
from apps.substitutions.automaton import EvPeriodicPath, build_automaton, finite_paths, vershik
from apps.substitutions.core import Substitution
from apps.substitutions.fixtures import fibonacci, tribonacci
from apps.trees.covering import prune
from apps.trees.metric import branch_point_expansions, refine_simplicial
from apps.trees.rule import build_tree_substitution, iterate


class PisotCheckTestCase(SimpleTestCase):
    def test_tribonacci(self):
        report = pisot_check(tribonacci())

        self.assertEqual(report.char_poly, (1, -1, -1, -1))
        self.assertTrue(report.irreducible_pisot)
        self.assertAlmostEqual(report.eigenvalue, 1.839286755, places=8)
        self.assertFalse(report.borderline)

    def test_fibonacci(self):
        report = pisot_check(fibonacci())

        self.assertEqual(report.char_poly, (1, -1, -1))
        self.assertTrue(report.irreducible_pisot)
        self.assertAlmostEqual(report.eigenvalue, (1 + 5**0.5) / 2)

    def test_thue_morse_is_reducible(self):
        substitution = Substitution.from_dict({"a": "ab", "b": "ba"})

        report = pisot_check(substitution)

        self.assertEqual(report.char_poly, (1, -2, 0))
        self.assertFalse(report.irreducible)
        self.assertFalse(report.irreducible_pisot)
        with self.assertRaises(PreconditionError):
            eigen_data(substitution)


class TribonacciGeometryTestCase(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.substitution = tribonacci()
        cls.eigen = eigen_data(cls.substitution)
        cls.matrix = cls.substitution.incidence
        cls.automaton = build_automaton(cls.substitution)
        aa, ab, ba = cls.automaton.edge(0, 0), cls.automaton.edge(1, 0), cls.automaton.edge(0, 1)
        cls.aa = aa
        cls.gamma_a = EvPeriodicPath.of((aa,), (aa, ab, ba))
        cls.analysis = analyze_singular(cls.substitution)

    def test_eigenvectors(self):
        value = self.eigen.report.eigenvalue
        matrix = np.array(self.matrix.tolist(), dtype=float)

        self.assertTrue(np.allclose(matrix @ self.eigen.u_float, value * self.eigen.u_float))
        self.assertTrue(np.allclose(self.eigen.v_float @ matrix, value * self.eigen.v_float))
        self.assertTrue((self.eigen.u_float > 0).all())

    def test_projection_kills_the_eigenline(self):
        self.assertTrue(np.allclose(self.eigen.project_float(self.eigen.u_float), 0))

    @parameterized.expand([((1, 0, 0),), ((0, 2, -1),), ((3, -5, 7),), ((-4, 1, 9),)])
    def test_projection_commutes_with_the_matrix(self, values):
        vector = rational_vector(values)
        image = rational_vector(self.matrix * sympy.Matrix(vector))

        projected = self.eigen.project(vector)
        projected_image = self.eigen.project(image)

        for row in range(3):
            expected = sum(int(self.matrix[row, column]) * projected[column] for column in range(3))
            self.assertEqual(projected_image[row], expected)
        self.assertTrue(self.eigen.dot(self.eigen.v, projected).is_zero)

    def test_projection_fixes_the_contracting_plane(self):
        vector = np.array([1.0, -2.0, 0.5])
        plane = self.eigen.project_float(vector)

        self.assertTrue(np.allclose(self.eigen.project_float(plane), plane))
        self.assertEqual(self.eigen.basis.shape, (3, 2))

    def test_plane_is_oriented(self):
        plane = self.eigen.plane
        matrix = np.array(self.matrix.tolist(), dtype=float)
        action = plane @ matrix @ np.linalg.pinv(plane)

        self.assertTrue(np.allclose(plane @ self.eigen.u_float, 0))
        self.assertTrue(np.allclose(plane @ matrix, action @ plane))
        self.assertGreater(np.linalg.det(action), 0)
        self.assertAlmostEqual(abs(np.linalg.det(action)), 1 / self.eigen.report.eigenvalue, places=8)

    def test_phi_of_the_empty_prefixes(self):
        self.assertEqual(phi(self.eigen, EvPeriodicPath.periodic((self.aa,))), ExactPoint.origin(3))

    def test_phi_of_gamma_a(self):
        expected = self.matrix * (sympy.eye(3) - self.matrix**3).inv() * sympy.Matrix([2, 1, 1])

        self.assertEqual(phi(self.eigen, self.gamma_a), ExactPoint(tuple(expected)))

    def test_phi_telescopes(self):
        for tail in self.analysis.points.by_tail:
            first = tail.edge(0)
            expected = path_vector(self.substitution, (first,)) + self.matrix * sympy.Matrix(
                phi(self.eigen, tail.behead(1)).vector
            )
            self.assertEqual(phi(self.eigen, tail), ExactPoint(tuple(expected)))

    def test_phi_identifies_singular_pairs(self):
        self.assertEqual(len(self.analysis.pairs), 6)
        for pair in self.analysis.pairs:
            self.assertEqual(phi(self.eigen, pair.first), phi(self.eigen, pair.second))

    def test_phi_separates_distinct_tails(self):
        tails = set(self.analysis.points.by_tail)
        tails |= {tail for pair in self.analysis.pairs for tail in (pair.first, pair.second)}
        points = {phi(self.eigen, tail) for tail in tails}

        self.assertEqual(len(points), len(self._classes(tails)))

    def _classes(self, tails):
        classes = {tail: frozenset((tail,)) for tail in tails}
        for pair in self.analysis.pairs:
            merged = classes[pair.first] | classes[pair.second]
            for tail in merged:
                classes[tail] = merged
        return set(classes.values())

    def test_domain_exchange_follows_the_shift(self):
        checked = 0
        for tail in self.analysis.points.by_tail:
            try:
                following = vershik(self.automaton, tail)
            except PreconditionError:
                continue
            expected = domain_exchange_step(phi(self.eigen, tail), tail.end)
            self.assertEqual(phi(self.eigen, following), expected)
            checked += 1
        self.assertGreater(checked, 0)

    def test_domain_exchange_step(self):
        point = domain_exchange_step(domain_exchange_step(ExactPoint.origin(3), 0), 2)

        self.assertEqual(point, ExactPoint(rational_vector([1, 0, 1])))
        self.assertEqual(point, domain_exchange_step(domain_exchange_step(ExactPoint.origin(3), 2), 0))

    def test_empty_cloud(self):
        cloud = rauzy_cloud(self.substitution, 0)

        self.assertEqual(cloud, [(ExactPoint.origin(3), letter) for letter in range(3)])

    @parameterized.expand([(length,) for length in range(1, 5)])
    def test_cloud_follows_the_paths(self, length):
        cloud = rauzy_cloud(self.substitution, length)

        self.assertEqual(len(cloud), len(finite_paths(self.automaton, length)))
        for letter in range(3):
            expected = {finite_point(self.substitution, path) for path in finite_paths(self.automaton, length, letter)}
            self.assertEqual({point for point, end in cloud if end == letter}, expected)

    def test_cloud_set_equation(self):
        for letter in range(3):
            unfolded = set()
            for edge in self.automaton.incoming[letter]:
                shift = ExactPoint(rational_vector(self.substitution.abelianize(edge.prefix)))
                cloud = rauzy_cloud(self.substitution, 3, edge.source)
                unfolded |= {point.transform(self.matrix) + shift for point, _ in cloud}
            self.assertEqual({point for point, _ in rauzy_cloud(self.substitution, 4, letter)}, unfolded)

    def test_strong_coincidence(self):
        result = strong_coincidence(self.substitution)

        self.assertTrue(result.holds)
        self.assertEqual([witness.iterations for witness in result.witnesses], [1, 1, 1])
        self.assertEqual(result.witnesses[0].first_prefix, (0, 0, 0))

    def test_dual_step_of_the_unit_faces(self):
        self.assertEqual(
            e1star_step(self.substitution, {Face.unit(3, 1)}),
            {Face(0, rational_vector([0, 0, 1]))},
        )
        self.assertEqual(
            e1star_step(self.substitution, {Face.unit(3, 0)}),
            {Face.unit(3, letter) for letter in range(3)},
        )

    @parameterized.expand([(times,) for times in range(5)])
    def test_dual_face_count(self, times):
        faces = e1star_iterate(self.substitution, times)

        self.assertEqual(len(faces), len(finite_paths(self.automaton, times)))
        self.assertTrue(all(face.integral for face in faces))


class StrongCoincidenceTestCase(SimpleTestCase):
    def test_single_letter(self):
        result = strong_coincidence(Substitution.from_dict({"a": "aa"}))

        self.assertTrue(result.holds)
        self.assertEqual(result.witnesses, ())

    def test_thue_morse(self):
        result = strong_coincidence(Substitution.from_dict({"a": "ab", "b": "ba"}), limit=6)

        self.assertFalse(result.holds)
        self.assertEqual(result.missing, ((0, 1),))


class EmbeddingTestCase(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        substitution = tribonacci()
        cls.eigen = eigen_data(substitution)
        cls.rule = refine_simplicial(build_tree_substitution(analyze_singular(substitution)))
        cls.expansions = branch_point_expansions(cls.rule)

    def test_initial_patch_is_a_planar_tree(self):
        embedding = embed_patch(self.rule, self.rule.initial, self.eigen, self.expansions)

        self.assertTrue(embedding.tree)
        self.assertEqual(embedding.graph.number_of_nodes(), 5)
        self.assertEqual(embedding.mismatches, [])
        self.assertEqual(embedding.coincidences, [])

    @parameterized.expand([(times,) for times in range(1, 4)])
    def test_glued_vertices_coincide(self, times):
        patch = iterate(self.rule, times=times, check=False)

        embedding = embed_patch(self.rule, patch, self.eigen, self.expansions)

        self.assertEqual(embedding.mismatches, [])

    def test_tiles_of_one_prototile_are_translates(self):
        patch = iterate(self.rule, times=3, check=False)
        embedding = embed_patch(self.rule, patch, self.eigen)

        for key in self.rule.keys:
            numbers = [number for number, instance in enumerate(patch.tiles) if instance.tile == key]
            first = numbers[0]
            for other in numbers[1:]:
                shifts = {
                    embedding.nodes[(other, vertex)] - embedding.nodes[(first, vertex)]
                    for vertex in self.rule.prototiles[key].gluing
                }
                self.assertEqual(len(shifts), 1)

    def test_pruned_patches_keep_their_gluings(self):
        pruned = prune(self.rule)

        for times in range(3):
            embedding = embed_patch(pruned, iterate(pruned, times=times, check=False), self.eigen)
            self.assertEqual(embedding.mismatches, [])

    def test_summary(self):
        data = embed_patch(self.rule, self.rule.initial, self.eigen, self.expansions).as_dict(self.eigen)

        self.assertTrue(data["tree"])
        self.assertEqual(len(data["points"]), 5)
        self.assertEqual(len(data["points"][0]["xy"]), 2)
