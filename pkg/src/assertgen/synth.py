"""Synthetic Java-like TAPs and projects for fuzzing and toy training runs."""
from __future__ import annotations

import random
from pathlib import Path

from .miner import PLACEHOLDER, TapRecord

_NOUNS = ["name", "value", "count", "size", "item", "user", "order", "price", "key", "index",
          "total", "state", "flag", "mode", "path", "text", "limit", "level", "score", "owner"]
_TYPES = ["Account", "Parser", "Buffer", "Cache", "Widget", "Invoice", "Session", "Matrix", "Node", "Queue"]


def _cap(s: str) -> str:
    return s[:1].upper() + s[1:]


def _literal(rng: random.Random) -> str:
    kind = rng.randrange(9)
    if kind == 0:
        return str(rng.randrange(100))
    if kind == 1:
        return f"{rng.randrange(1000)}L"
    if kind == 2:
        return f"{rng.randrange(10)}.{rng.randrange(100)}f"
    if kind == 3:
        return f"{rng.randrange(10)}.{rng.randrange(100)}"
    if kind == 4:
        return "'%s'" % rng.choice("abcxyz")
    if kind == 5:
        return '"%s %d"' % (rng.choice(_NOUNS), rng.randrange(50))
    if kind == 6:
        return rng.choice(["true", "false"])
    if kind == 7:
        return "null"
    return f"0x{rng.randrange(4096):X}"


def fuzz_tap(rng: random.Random) -> TapRecord:
    """A random TAP exercising every literal kind, qualified calls, generics
    and casts.  Not necessarily compilable Java; always lexable."""
    ty = rng.choice(_TYPES)
    var = rng.choice(_NOUNS) + str(rng.randrange(5))
    test = ["test" + _cap(rng.choice(_NOUNS)) + str(rng.randrange(1000)), "(", ")", "{",
            ty, var, "=", "new", ty, "(", ")", ";"]
    for _ in range(rng.randrange(1, 6)):
        form = rng.randrange(4)
        a, b = rng.choice(_NOUNS), rng.choice(_NOUNS) + str(rng.randrange(20))
        if form == 0:
            test += [var, ".", "set" + _cap(a), "(", _literal(rng), ")", ";"]
        elif form == 1:
            test += ["List", "<", rng.choice(_TYPES), ">", b, "=", var, ".", a + "s", "(", ")", ";"]
        elif form == 2:
            test += ["int", b, "=", "(", "int", ")", var, ".", "get" + _cap(a), "(", _literal(rng), ",", _literal(rng), ")", ";"]
        else:
            test += [rng.choice(_TYPES), b, "=", "(", rng.choice(_TYPES), ")", a, ";"]
    test += [PLACEHOLDER, ";", "}"]
    getter = "get" + _cap(rng.choice(_NOUNS))
    focal = [getter, "(", ")", "{", "return", "this", ".", rng.choice(_NOUNS), ";", "}"]
    expected = _literal(rng) if rng.random() < 0.8 else rng.choice(_NOUNS) + str(rng.randrange(99))
    name = rng.choice(["assertEquals", "assertTrue", "assertNotNull", "assertSame"])
    qual = rng.choice([[], ["Assert", "."], ["org", ".", "junit", ".", "Assert", "."]])
    if name == "assertEquals" or name == "assertSame":
        target = qual + [name, "(", expected, ",", var, ".", getter, "(", ")", ")"]
    else:
        target = qual + [name, "(", var, ".", getter, "(", ")", ")"]
    return TapRecord(test + focal, target, focal_signature=f"{getter}()", test_length=len(test))


def fuzz_corpus(n: int, seed: int = 0) -> list[TapRecord]:
    rng = random.Random(seed)
    return [fuzz_tap(rng) for _ in range(n)]


def toy_tap(rng: random.Random, i: int) -> TapRecord:
    """A small, regular TAP: the assert checks the value set earlier."""
    ty = rng.choice(_TYPES)
    var = ty[0].lower() + ty[1:]
    field = rng.choice(_NOUNS)
    value = str(rng.randrange(10))
    setter, getter = "set" + _cap(field), "get" + _cap(field)
    test = ["test" + _cap(field) + str(i), "(", ")", "{", ty, var, "=", "new", ty, "(", ")", ";",
            var, ".", setter, "(", value, ")", ";", PLACEHOLDER, ";", "}"]
    focal = [getter, "(", ")", "{", "return", field, ";", "}"]
    kind = i % 3
    if kind == 0:
        target = ["assertEquals", "(", value, ",", var, ".", getter, "(", ")", ")"]
    elif kind == 1:
        target = ["assertNotNull", "(", var, ".", getter, "(", ")", ")"]
    else:
        target = ["assertTrue", "(", var, ".", getter, "(", ")", ">", "0", ")"]
    return TapRecord(test + focal, target, focal_signature=f"{getter}()", test_length=len(test))


def toy_corpus(n: int = 50, seed: int = 0, rare_token: str | None = None) -> list[TapRecord]:
    """``n`` toy TAPs; with ``rare_token`` set, the last TAP's focal method
    and assert use that identifier, which occurs nowhere else."""
    rng = random.Random(seed)
    taps = [toy_tap(rng, i) for i in range(n)]
    if rare_token is not None:
        last = taps[-1]
        test = last.test_tokens
        var = test[5]
        focal = [rare_token, "(", ")", "{", "return", "done", ";", "}"]
        target = ["assertTrue", "(", var, ".", rare_token, "(", ")", ")"]
        taps[-1] = TapRecord(test + focal, target, focal_signature=f"{rare_token}()", test_length=len(test))
    return taps


_PROJECT_POM = """<project>
  <modelVersion>4.0.0</modelVersion>
  <groupId>demo</groupId>
  <artifactId>{name}</artifactId>
  <version>1.0</version>
  <dependencies>
    <dependency>
      <groupId>junit</groupId>
      <artifactId>junit</artifactId>
      <version>4.12</version>
      <scope>test</scope>
    </dependency>
  </dependencies>
</project>
"""


def write_toy_project(root: Path, name: str, n_tests: int, seed: int = 0) -> Path:
    """Write a small Maven-shaped project whose tests each hold one assert."""
    rng = random.Random(seed)
    proj = Path(root) / name
    src = proj / "src" / "main" / "java" / "demo"
    tst = proj / "src" / "test" / "java" / "demo"
    src.mkdir(parents=True, exist_ok=True)
    tst.mkdir(parents=True, exist_ok=True)
    (proj / "pom.xml").write_text(_PROJECT_POM.format(name=name), encoding="utf-8")
    ty = _cap(name.replace("-", "")) + "Box"
    fields = rng.sample(_NOUNS, k=min(n_tests, len(_NOUNS)))
    body = [f"package demo;\n\npublic class {ty} {{"]
    for f in fields:
        body.append(f"    private int {f};\n")
        body.append(f"    public void set{_cap(f)}(int {f}) {{\n        this.{f} = {f};\n    }}\n")
        body.append(f"    public int get{_cap(f)}() {{\n        return {f};\n    }}\n")
    body.append("}\n")
    (src / f"{ty}.java").write_text("\n".join(body), encoding="utf-8")
    tests = [f"package demo;\n\nimport org.junit.Test;\nimport static org.junit.Assert.*;\n\npublic class {ty}Test {{"]
    for i in range(n_tests):
        f = fields[i % len(fields)]
        v = rng.randrange(1, 100)
        tests.append(
            f"    @Test\n    public void test{_cap(f)}{i}() {{\n"
            f"        {ty} box = new {ty}();\n"
            f"        box.set{_cap(f)}({v});\n"
            f"        assertEquals({v}, box.get{_cap(f)}());\n    }}\n"
        )
    tests.append("}\n")
    (tst / f"{ty}Test.java").write_text("\n".join(tests), encoding="utf-8")
    return proj
