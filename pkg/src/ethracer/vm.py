"""Deterministic interpreter: runs events atomically against a world state."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .lang import ast as A
from .state import ADDRESS_LIMIT, WORD, Event, Mapping, WorldState, default_value

LOOP_CAP = 10_000


class Reason(str, enum.Enum):
    REQUIRE_FAILED = "RequireFailed"
    EXPLICIT_THROW = "ExplicitThrow"
    DIV_BY_ZERO = "DivByZero"
    INDEX_OOB = "IndexOOB"
    NON_PAYABLE_VALUE = "NonPayableValue"
    LOOP_CAP = "LoopCap"
    INSUFFICIENT_FUNDS = "InsufficientFunds"


class Revert(Exception):
    def __init__(self, reason: Reason, detail: str = ""):
        super().__init__(f"{reason.value}: {detail}" if detail else reason.value)
        self.reason = reason
        self.detail = detail


class UnknownFunction(KeyError):
    pass


class MalformedEvent(ValueError):
    pass


class _Return(Exception):
    pass


class Mode(str, enum.Enum):
    STRICT = "strict"
    TOLERANT = "tolerant"


OK = "Ok"
NOT_RUN = "NotRun"


@dataclass(frozen=True)
class RunOutcome:
    """Result of one event. On revert ``state`` is the untouched pre-state."""

    state: WorldState
    reason: Optional[Reason] = None
    detail: str = ""
    issued: tuple[int, ...] = ()

    @property
    def ok(self) -> bool:
        return self.reason is None

    @property
    def status(self) -> str:
        return OK if self.reason is None else self.reason.value


@dataclass
class TraceOutcome:
    statuses: list[str]
    final: WorldState
    valid: bool
    issued: list[tuple[int, ...]]


class _Frame:
    __slots__ = ("state", "msg", "locals", "issued", "origin")

    def __init__(self, state: WorldState, msg, origin: int):
        self.state = state
        self.msg = msg
        self.locals: dict = {}
        self.issued: list[int] = []
        self.origin = origin


def _check_scalar(t: A.ScalarType, v) -> bool:
    if t == A.BOOL:
        return isinstance(v, bool)
    if isinstance(v, bool) or not isinstance(v, int):
        return False
    limit = ADDRESS_LIMIT if t == A.ADDRESS else WORD
    return 0 <= v < limit


class VM:
    """Interpreter bound to one contract."""

    def __init__(self, contract: A.ContractDef):
        self.contract = contract
        self.functions = {f.name: f for f in contract.functions}

    # -- public API --------------------------------------------------------

    def validate(self, e: Event) -> A.FunctionDef:
        f = self.functions.get(e.fn)
        if f is None:
            raise UnknownFunction(e.fn)
        if len(e.msg.args) != len(f.params):
            raise MalformedEvent(f"{e.fn} expects {len(f.params)} arguments, got {len(e.msg.args)}")
        for p, a in zip(f.params, e.msg.args):
            if not _check_scalar(p.type, a):
                raise MalformedEvent(f"{e.fn}: argument {p.name} is not a valid {p.type}: {a!r}")
        if not _check_scalar(A.ADDRESS, e.msg.sender) or not _check_scalar(A.UINT, e.msg.value):
            raise MalformedEvent(f"{e.fn}: bad sender or value")
        return f

    def exec_event(self, s: WorldState, e: Event, origin: int = -1) -> RunOutcome:
        f = self.validate(e)
        work = s.clone()
        frame = _Frame(work, e.msg, origin)
        try:
            value = e.msg.value
            if value:
                if not f.payable:
                    raise Revert(Reason.NON_PAYABLE_VALUE, f"{f.name} is not payable")
                have = work.ext_balances.get(e.msg.sender, 0)
                if have < value:
                    raise Revert(Reason.INSUFFICIENT_FUNDS, f"sender holds {have}, sends {value}")
                work.ext_balances[e.msg.sender] = have - value
                work.balance += value
            if f.name == A.CALLBACK:
                qid = e.msg.args[0]
                if qid not in work.pending_queries:
                    raise Revert(Reason.REQUIRE_FAILED, f"no pending oracle query {qid}")
                del work.pending_queries[qid]
            for p, a in zip(f.params, e.msg.args):
                frame.locals[p.name] = a
            try:
                self._block(f.body, frame)
            except _Return:
                pass
        except Revert as r:
            return RunOutcome(s, r.reason, r.detail)
        return RunOutcome(work, None, "", tuple(frame.issued))

    def exec_trace(self, s0: WorldState, h: Sequence[Event], mode: Mode = Mode.STRICT) -> TraceOutcome:
        for e in h:
            if e.fn not in self.functions:
                raise UnknownFunction(e.fn)
        state = s0
        statuses: list[str] = []
        issued: list[tuple[int, ...]] = []
        valid = True
        for i, e in enumerate(h):
            out = self.exec_event(state, e, origin=i)
            statuses.append(out.status)
            issued.append(out.issued)
            if out.ok:
                state = out.state
                continue
            valid = False
            if mode == Mode.STRICT:
                statuses.extend([NOT_RUN] * (len(h) - i - 1))
                issued.extend([()] * (len(h) - i - 1))
                break
        return TraceOutcome(statuses, state, valid, issued)

    # -- statements --------------------------------------------------------

    def _block(self, b: A.Block, fr: _Frame) -> None:
        for s in b.stmts:
            self._stmt(s, fr)

    def _stmt(self, s, fr: _Frame) -> None:
        t = type(s)
        if t is A.Assign:
            if s.op == "=":
                self._store(s.target, self._eval(s.value, fr), fr)
                return
            old = self._eval(s.target, fr)
            if s.op == "++":
                new = (old + 1) % WORD
            elif s.op == "--":
                new = (old - 1) % WORD
            else:
                new = self._arith(s.op[0], old, self._eval(s.value, fr))
            self._store(s.target, new, fr)
        elif t is A.Require:
            if not self._eval(s.cond, fr):
                raise Revert(Reason.REQUIRE_FAILED, f"line {s.pos[0]}")
        elif t is A.If:
            if self._eval(s.cond, fr):
                self._block(s.then, fr)
            elif s.orelse is not None:
                self._block(s.orelse, fr)
        elif t is A.VarDecl:
            fr.locals[s.name] = self._eval(s.init, fr) if s.init is not None else default_value(s.type)
        elif t is A.Throw:
            raise Revert(Reason.EXPLICIT_THROW, f"line {s.pos[0]}")
        elif t is A.Send:
            to = self._eval(s.to, fr)
            amount = self._eval(s.amount, fr)
            st = fr.state
            if st.balance >= amount:
                st.balance -= amount
                st.ext_balances[to] = st.ext_balances.get(to, 0) + amount
                st.transfer_log = st.transfer_log + ((to, amount, True),)
            else:
                st.transfer_log = st.transfer_log + ((to, amount, False),)
        elif t is A.Push:
            arr = self._container(s.target, fr)
            arr.append(self._eval(s.value, fr))
        elif t is A.For:
            lo = self._eval(s.start, fr)
            hi = self._eval(s.stop, fr)
            if hi - lo > LOOP_CAP:
                raise Revert(Reason.LOOP_CAP, f"{hi - lo} iterations")
            for i in range(lo, hi):
                fr.locals[s.var] = i
                self._block(s.body, fr)
        elif t is A.Return:
            if s.value is not None:
                self._eval(s.value, fr)
            raise _Return()
        elif t is A.ExprStmt:
            self._eval(s.expr, fr)
        elif t is A.Block:
            self._block(s, fr)
        else:  # pragma: no cover
            raise TypeError(s)

    def _store(self, target, value, fr: _Frame) -> None:
        if type(target) is A.Name:
            if target.id in fr.locals:
                fr.locals[target.id] = value
            else:
                fr.state.fields[target.id] = value
            return
        container = self._container(target.base, fr)
        key = self._eval(target.index, fr)
        if isinstance(container, list):
            if key >= len(container):
                raise Revert(Reason.INDEX_OOB, f"index {key} >= length {len(container)}")
        container[key] = value

    def _container(self, e, fr: _Frame):
        if type(e) is A.Name:
            return fr.state.fields[e.id]
        parent = self._container(e.base, fr)
        key = self._eval(e.index, fr)
        return parent.slot(key)

    # -- expressions -------------------------------------------------------

    @staticmethod
    def _arith(op: str, a: int, b: int) -> int:
        if op == "+":
            return (a + b) % WORD
        if op == "-":
            return (a - b) % WORD
        if op == "*":
            return (a * b) % WORD
        if b == 0:
            raise Revert(Reason.DIV_BY_ZERO)
        return a // b if op == "/" else a % b

    def _eval(self, e, fr: _Frame):
        t = type(e)
        if t is A.Name:
            loc = fr.locals
            if e.id in loc:
                return loc[e.id]
            return fr.state.fields[e.id]
        if t is A.IntLit or t is A.BoolLit:
            return e.value
        if t is A.Index:
            base = self._eval(e.base, fr)
            key = self._eval(e.index, fr)
            if isinstance(base, Mapping):
                return base.read(key)
            if key >= len(base):
                raise Revert(Reason.INDEX_OOB, f"index {key} >= length {len(base)}")
            return base[key]
        if t is A.Binary:
            op = e.op
            if op == "&&":
                return bool(self._eval(e.left, fr)) and bool(self._eval(e.right, fr))
            if op == "||":
                return bool(self._eval(e.left, fr)) or bool(self._eval(e.right, fr))
            a = self._eval(e.left, fr)
            b = self._eval(e.right, fr)
            if op == "==":
                return a == b
            if op == "!=":
                return a != b
            if op == "<":
                return a < b
            if op == "<=":
                return a <= b
            if op == ">":
                return a > b
            if op == ">=":
                return a >= b
            return self._arith(op, a, b)
        if t is A.Env:
            k = e.kind
            if k == "msg.sender":
                return fr.msg.sender
            if k == "msg.value":
                return fr.msg.value
            if k == "now":
                return fr.msg.timestamp
            if k == "block.number":
                return fr.msg.blocknumber
            return fr.state.balance
        if t is A.Unary:
            return not self._eval(e.operand, fr)
        if t is A.Length:
            return len(self._eval(e.base, fr))
        if t is A.OracleCall:
            args = tuple(self._eval(a, fr) for a in e.args)
            st = fr.state
            qid = st.next_qid
            st.next_qid = qid + 1
            st.pending_queries[qid] = (fr.origin, args)
            fr.issued.append(qid)
            return qid
        raise TypeError(e)  # pragma: no cover


def exec_event(contract: A.ContractDef, s: WorldState, e: Event) -> RunOutcome:
    return VM(contract).exec_event(s, e)


def exec_trace(contract: A.ContractDef, s0: WorldState, h: Iterable[Event], mode: Mode = Mode.STRICT) -> TraceOutcome:
    return VM(contract).exec_trace(s0, list(h), mode)
