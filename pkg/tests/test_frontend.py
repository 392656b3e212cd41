import pytest
from hypothesis import given, settings, strategies as st

from flexrepair.frontend import (Assign, ImportBinding, ListLit, MiniLangSyntaxError, TupleTarget,
                                 UnsupportedConstruct, collect_imports, parse, unparse)


def test_sample_assignments():
    tree = parse("a = [5, 6]\nb, c = a\n")
    first, second = tree.items
    assert isinstance(first, Assign) and isinstance(first.value, ListLit)
    assert isinstance(second, Assign) and isinstance(second.targets[0], TupleTarget)


@pytest.mark.parametrize("text", ["", "   \n\t\n"])
def test_empty_program_is_syntax_error(text):
    with pytest.raises(MiniLangSyntaxError):
        parse(text)


def test_bad_syntax_reports_line():
    with pytest.raises(MiniLangSyntaxError) as ex:
        parse("x = 1\ny = (\n")
    assert ex.value.line >= 2


@pytest.mark.parametrize("text,construct", [
    ("x = lambda y: y", "lambda"),
    ("class A:\n    pass\n", "class"),
    ("try:\n    x = 1\nexcept E:\n    x = 2\n", "try"),
    ("print(1, end='')", "keyword argument"),
    ("x = [i for i in y]", "comprehension"),
])
def test_unsupported_constructs(text, construct):
    with pytest.raises(UnsupportedConstruct) as ex:
        parse(text)
    assert ex.value.construct == construct
    assert ex.value.line == 1


def test_import_forms():
    src = ("import math\nimport math as m\nfrom math import sqrt\n"
           "from math import floor as fl\nfrom math import *\nfrom math import sqrt as sq\n")
    table = collect_imports(parse(src))
    d = table.as_dict()
    assert d["math"] == ("math",)
    assert d["m"] == ("math",)
    assert d["sqrt"] == ("sqrt", "math")
    assert d["fl"] == ("floor", "math")
    assert d["sq"] == ("sqrt", "math")
    assert d["*"] == ("*", "math")
    assert table.lookup("sq") == ImportBinding("sq", "sqrt", "math")


def test_no_imports_gives_empty_table():
    assert collect_imports(parse("x = 1\n")).as_dict() == {}


ROUND_TRIP = [
    "a = [5, 6]\nb, c = a\nb += 1\n",
    "def f(a, b):\n    if a < b and not a == 0:\n        return a\n    elif b > 2:\n"
    "        return b\n    else:\n        return -a\n\n\nprint(f(1, 2))\n",
    "x = 0\nwhile x < 10:\n    x += 2\n    if x % 3 == 0:\n        break\n    continue\n",
    "for i in range(3):\n    print(i, 'a' if i else 'b', s[1:2])\n",
    "import math\nprint(math.sqrt(4), x.split(), (1,), (1, 2))\n",
]


@pytest.mark.parametrize("text", ROUND_TRIP)
def test_round_trip_is_stable(text):
    tree = parse(text)
    again = parse(unparse(tree))
    assert again == tree
    assert unparse(again) == unparse(tree)


def _lines(node, acc):
    if hasattr(node, "line"):
        acc.append(node.line)
    if isinstance(node, (list, tuple)):
        for x in node:
            _lines(x, acc)
    elif hasattr(node, "__dataclass_fields__"):
        for name in node.__dataclass_fields__:
            _lines(getattr(node, name), acc)
    return acc


@pytest.mark.parametrize("text", ROUND_TRIP)
def test_line_numbers_in_range(text):
    n = text.count("\n") + 1
    assert all(1 <= l <= n for l in _lines(parse(text).items, []))


@settings(max_examples=300)
@given(st.text(alphabet="ab=+-()[]:,.\n 0123456789ifwhle", max_size=40))
def test_parse_is_total(text):
    try:
        parse(text)
    except (MiniLangSyntaxError, UnsupportedConstruct):
        pass
