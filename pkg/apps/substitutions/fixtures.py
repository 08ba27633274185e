from apps.substitutions.core import Substitution

TRIBONACCI_RULES = """
a -> ab
b -> ac
c -> a
"""

# a parageometric automorphism whose Rauzy fractal is not simply connected
EXAMPLE_ONE_RULES = """
a -> ac
b -> ab
c -> b
"""

# a Pisot substitution whose inverse is parageometric but not geometric
EXAMPLE_TWO_RULES = """
a -> abc
b -> bcabc
c -> cbcabc
"""

FIBONACCI_RULES = """
a -> ab
b -> a
"""

FIXTURES = {
    "tribonacci": TRIBONACCI_RULES,
    "example1": EXAMPLE_ONE_RULES,
    "example2": EXAMPLE_TWO_RULES,
    "fibonacci": FIBONACCI_RULES,
}


def tribonacci() -> Substitution:
    return Substitution.from_dict({"a": "ab", "b": "ac", "c": "a"})


def example_one() -> Substitution:
    return Substitution.from_dict({"a": "ac", "b": "ab", "c": "b"})


def example_two() -> Substitution:
    return Substitution.from_dict({"a": "abc", "b": "bcabc", "c": "cbcabc"})


def fibonacci() -> Substitution:
    return Substitution.from_dict({"a": "ab", "b": "a"})
