"""Small builders shared by several test modules."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from assertgen.neural.model import ModelConfig, Vocab, init_params

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS = FIXTURES / "corpus"

# 8 ordinary tokens plus the 4 reserved ones gives V = 12.
TINY_TOKENS = ["a", "b", "c", "(", ")", ".", ",", "x"]


def tiny_vocab() -> Vocab:
    return Vocab.from_tokens(TINY_TOKENS)


def tiny_model(copy: bool, attention: str = "additive", seed: int = 0, d: int = 4, h: int = 4,
               bias_scale: float = 0.3, init_scale: float = 0.5):
    """A d=h=4, V=12 model with non-zero biases so every path carries signal."""
    vocab = tiny_vocab()
    cfg = ModelConfig(vocab_size=len(vocab), d=d, h=h, copy_enabled=copy, dropout_rate=0.0,
                      attention=attention, init_scale=init_scale)
    params = init_params(cfg, seed=seed)
    rng = np.random.default_rng(seed + 1000)
    for name, t in params.tensors.items():
        if name.endswith("_b"):
            t.data[...] = rng.normal(0.0, bias_scale, size=t.data.shape)
    return params, vocab


def random_tokens(rng: np.random.Generator, n: int, pool=TINY_TOKENS + ["zz", "qq"]) -> list[str]:
    return [pool[i] for i in rng.integers(0, len(pool), size=n)]


def zero_like_params(params):
    for t in params.tensors.values():
        t.data[...] = 0.0
    return params


# -- focal-method fixture ---------------------------------------------------
# (label, test body statements, pool class members, expected focal signature)
FOCAL_CASES = [
    ("last call before assert", "a(); b(); assertTrue(x);",
     "void a() { } void b() { }", "b()"),
    ("call inside assert arguments", "assertEquals(5, getName());",
     "String getName() { return n; }", "getName()"),
    ("library calls only", "list.add(1); assertTrue(list.isEmpty());",
     "void foo() { }", None),
    ("inside beats before", "a(); assertEquals(1, b());",
     "int a() { return 0; } int b() { return 1; }", "b()"),
    ("arity must match", "c.add(1); assertTrue(ok);",
     "int add(int p, int q) { return p + q; }", None),
    ("nested before assert picks outermost", "x = outer(inner(1)); assertTrue(x);",
     "boolean outer(int v) { return true; } int inner(int v) { return v; }", "outer(int)"),
    ("calls after the assert are ignored", "a(); assertTrue(x); b();",
     "void a() { } void b() { }", "a()"),
    ("nested inside assert picks outermost", "assertEquals(3, outer(inner()));",
     "int outer(int v) { return v; } int inner() { return 3; }", "outer(int)"),
    ("unmatched inside falls back to before", "a(); assertEquals(1, lib.size());",
     "void a() { }", "a()"),
    ("overloads resolved by arity", "s.put(1, 2); Assert.assertTrue(s.ok);",
     "void put(int k) { } void put(int k, int v) { }", "put(int,int)"),
]


def focal_case_methods(body: str, pool_members: str):
    """Lex a one-test class and a pool class; return (test, pool)."""
    from assertgen.jlex import lex
    from assertgen.miner import extract_file_methods

    test_src = "class T { @Test public void testIt() { %s } }" % body
    pool_src = "class P { %s }" % pool_members
    tests = extract_file_methods(lex(test_src), "fixture", "T.java")
    pool = extract_file_methods(lex(pool_src), "fixture", "P.java")
    assert len(tests) == 1 and tests[0].is_test
    return tests[0], pool


# -- filter fixture ---------------------------------------------------------

_BOX = """package fx;

public class Box {
    private int size;

    public void setSize(int size) {
        this.size = size;
    }

    public int getSize() {
        return size;
    }
}
"""

_TEST_HEAD = "package fx;\n\nimport org.junit.Test;\nimport static org.junit.Assert.*;\n\npublic class %s {\n"


def _test_method(name: str, body: str) -> str:
    return "    @Test\n    public void %s() {\n        Box box = new Box();\n%s    }\n" % (name, body)


FILTER_FIXTURE_CAPACITY = 20


def write_filter_fixture(root: Path) -> Path:
    """One project whose mined TAPs trip each filter exactly once.

    * ``testLong``: 170 setter calls give a context of more than 1000 tokens.
    * ``testUnknown``: the assert mentions ``ZZ_LIMIT``, which occurs nowhere
      else, so it is neither in a 20-token vocabulary nor in the context.
    * ``testDup`` is declared identically in two classes.
    * three ordinary tests survive.
    """
    proj = Path(root) / "filterfx"
    src = proj / "src"
    src.mkdir(parents=True, exist_ok=True)
    (proj / "pom.xml").write_text(
        "<project><dependencies><dependency><groupId>junit</groupId><artifactId>junit</artifactId>"
        "<version>4.12</version></dependency></dependencies></project>\n"
    )
    (src / "Box.java").write_text(_BOX)
    ordinary = "".join(
        _test_method(f"testSize{v}", f"        box.setSize({v});\n        assertEquals({v}, box.getSize());\n")
        for v in (3, 4, 5)
    )
    long_body = "        box.setSize(1);\n" * 170 + "        assertEquals(1, box.getSize());\n"
    unknown = "        box.setSize(2);\n        assertEquals(ZZ_LIMIT, box.getSize());\n"
    dup = _test_method("testDup", "        box.setSize(7);\n        assertEquals(7, box.getSize());\n")
    (src / "BoxTest.java").write_text(
        _TEST_HEAD % "BoxTest" + ordinary + _test_method("testLong", long_body)
        + _test_method("testUnknown", unknown) + dup + "}\n"
    )
    (src / "BoxAgainTest.java").write_text(_TEST_HEAD % "BoxAgainTest" + dup + "}\n")
    return proj
