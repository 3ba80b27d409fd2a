from functools import reduce
from typing import List, Sequence, Tuple

import numpy as np

from app.common.errors import DimensionMismatchError
from app.linalg.schema import SubsetMask
from app.settings import settings

from .schema import FactorizedOperator, TraceBoundReport


def check_family(ops: Sequence[FactorizedOperator]) -> Tuple[int, ...]:
    if not ops:
        raise ValueError("need at least one factorized operator")
    dims = ops[0].dims
    for op in ops[1:]:
        if op.dims != dims:
            raise DimensionMismatchError(f"operators over {op.dims} and {dims}")
    return dims


def common_identity(ops: Sequence[FactorizedOperator]) -> SubsetMask:
    """∩_k L_k"""
    return reduce(lambda acc, op: acc.intersection(op.identity), ops[1:], ops[0].identity)


def trace_of_product(ops: Sequence[FactorizedOperator]) -> complex:
    """在全空间上直接相乘求 Tr(A_1⋯A_m)"""
    check_family(ops)
    product = reduce(np.matmul, [op.full() for op in ops])
    return complex(np.trace(product))


def check_trace_bound(ops: Sequence[FactorizedOperator]) -> TraceBoundReport:
    dims = check_family(ops)
    common = common_identity(ops)
    lhs = abs(trace_of_product(ops))
    rhs = common.dim * float(np.prod([op.trace_norm() for op in ops]))
    return TraceBoundReport(
        m=len(ops),
        n=len(dims),
        lhs=lhs,
        rhs=rhs,
        common_dim=common.dim,
        passed=lhs <= rhs + settings.tolerances.trace_bound,
    )


def reduce_common_factor(ops: Sequence[FactorizedOperator]) -> Tuple[List[FactorizedOperator], int]:
    """去掉所有 L_k 共有的因子，返回约化后的算子族与 d_{∩L}"""
    dims = check_family(ops)
    common = common_identity(ops)
    kept = common.complement_indices
    reduced_dims = tuple(dims[i] for i in kept)
    reduced = []
    for op in ops:
        identity = SubsetMask(dims=reduced_dims, members=tuple(op.identity.members[i] for i in kept))
        reduced.append(
            FactorizedOperator(
                dims=reduced_dims, identity=identity, b=op.b, a_vec=op.a_vec, b_vec=op.b_vec
            )
        )
    return reduced, common.dim
