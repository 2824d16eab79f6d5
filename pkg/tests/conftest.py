import pytest

from cd4csp import FiniteAlgebra, OperationTable, enumerate_cd4_algebras


def majority_table(n=2):
    """Independent majority rule on {0,1}: value occurring at least twice."""
    flat = []
    for x in range(n):
        for y in range(n):
            for z in range(n):
                flat.append(1 if x + y + z >= 2 else 0)
    return tuple(flat)


@pytest.fixture(scope="session")
def maj_alg():
    op = OperationTable(3, 2, majority_table())
    return FiniteAlgebra(2, op, op, op)


@pytest.fixture(scope="session")
def idealfree_alg():
    """p1 = first projection, p3 = third projection, p2 forced by the chain:
    l(x,y) = y and r(x,y) = y, so no proper subset absorbs either side."""
    p1 = tuple(x for x in range(2) for _ in range(4))
    p3 = tuple(z for _ in range(4) for z in range(2))
    p2 = (0, 1, 0, 0, 1, 1, 0, 1)
    return FiniteAlgebra(
        2,
        OperationTable(3, 2, p1),
        OperationTable(3, 2, p2),
        OperationTable(3, 2, p3),
    )


@pytest.fixture(scope="session")
def proj1_triple():
    """All three operations the first projection: breaks p3(x,y,y)=y."""
    p = tuple(x for x in range(2) for _ in range(4))
    op = OperationTable(3, 2, p)
    return FiniteAlgebra(2, op, op, op)


@pytest.fixture(scope="session")
def pool2():
    return enumerate_cd4_algebras(2).algebras


@pytest.fixture(scope="session")
def pool3():
    return enumerate_cd4_algebras(3, 40).algebras
