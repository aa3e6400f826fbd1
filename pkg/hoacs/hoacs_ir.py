"""
A protection pass over a small straight-line three-address IR.

Grammar (one item per line, ``;`` starts a comment)::

    ;! moduli=16,17 seed=7
    func @name(%rnc_key: u8, %b: u8) {
      %c = const u8 43
      %d = add u8 %rnc_key, %b
      %e = call u8 @rnc.encode %c
      ret u8 %d, %e
    }

Names starting with ``rnc_`` are sensitive. ``transform`` propagates that
marking, replaces add/sub/mul/eq/ne on sensitive values with ``@rnc.*``
intrinsic calls, encodes sensitive constants at compile time and decodes
around every other operation. ``interpret`` evaluates both the plain and
the transformed form.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
import logging
import math
import random
import re

from hoacs.errors import (
    IrError,
    IrSyntaxError,
    OutOfRange,
    Redefinition,
    Trap,
    TypeMismatch,
    UnsupportedType,
    UseBeforeDef,
)
from hoacs.rnc_core import (
    SHIFT_MULTIPLIER_BOUND,
    EncodedValue,
    ModuliSet,
    add_random_shift,
    decode,
    encode,
    make_moduli_set,
    parse_moduli,
)
from hoacs.rnc_ops import add_enc, eq_enc, less_than, mod_enc, mul_enc, sub_enc

logger = logging.getLogger(__name__)

TAINT_PREFIX = "rnc_"
INTRINSIC_PREFIX = "rnc."
TYPES = {"u8": 8, "u32": 32}
BINARY_OPS = ("add", "sub", "mul", "eq", "ne", "div", "xor", "shl")
OPCODES = frozenset(BINARY_OPS) | {"const", "ret", "call"}
SUPPORTED_OPS = frozenset({"add", "sub", "mul", "eq", "ne"})
INTRINSICS = frozenset({"encode", "decode", "literal"}) | SUPPORTED_OPS

Operand = str | int

_FUNC_RE = re.compile(r"func\s+@(\w+)\s*\((.*)\)\s*\{$")
_PARAM_RE = re.compile(r"%(\w+)\s*:\s*(\w+)$")
_INSTR_RE = re.compile(r"%(\w+)\s*=\s*(\w+)\s+(\w+)\s*(.*)$")
_RET_RE = re.compile(r"ret\s+(\w+)\s+(.+)$")
_CALLEE_RE = re.compile(r"@([\w.]+)\s*(.*)$")


@dataclass
class IrInstr:
    result: str | None
    opcode: str
    type: str
    operands: tuple[Operand, ...]
    callee: str | None = None
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(o for o in self.operands if isinstance(o, str))

    def is_intrinsic(self) -> bool:
        return self.opcode == "call" and bool(self.callee) and self.callee.startswith(INTRINSIC_PREFIX)


@dataclass
class IrParam:
    name: str
    type: str


@dataclass
class IrFunction:
    name: str
    params: list[IrParam]
    body: list[IrInstr]
    line: int = field(default=0, compare=False)


@dataclass
class IrModule:
    functions: list[IrFunction]
    pragma: dict[str, str] = field(default_factory=dict)

    def function(self, name: str | None = None) -> IrFunction:
        if name is None:
            if not self.functions:
                raise IrError("module has no functions")
            return self.functions[0]
        for fn in self.functions:
            if fn.name == name:
                return fn
        raise IrError(f"no function @{name}")


@dataclass(frozen=True)
class TaintSet:
    by_function: dict[str, frozenset[str]]

    @property
    def names(self) -> frozenset[str]:
        return frozenset().union(*self.by_function.values())

    def of(self, function: str) -> frozenset[str]:
        return self.by_function.get(function, frozenset())

    def __contains__(self, name: object) -> bool:
        return name in self.names

    def __len__(self) -> int:
        return len(self.names)


# parsing


def _check_type(token: str, line: int, column: int) -> str:
    if token in TYPES:
        return token
    if re.fullmatch(r"[a-z]+\d+", token):
        raise UnsupportedType(f"type {token} is not supported", line, column)
    raise IrSyntaxError(f"expected a type, got {token!r}", line, column)


def _parse_operands(text: str, line: int, column: int) -> tuple[Operand, ...]:
    operands: list[Operand] = []
    offset = column
    for raw in text.split(","):
        token = raw.strip()
        col = offset + (len(raw) - len(raw.lstrip()))
        offset += len(raw) + 1
        if re.fullmatch(r"%\w+", token):
            operands.append(token[1:])
        elif re.fullmatch(r"\d+", token):
            operands.append(int(token))
        else:
            raise IrSyntaxError(f"bad operand {token!r}", line, col)
    return tuple(operands)


class _FunctionChecker:
    """Single assignment, def-before-use and per-opcode type rules."""

    def __init__(self, fn: IrFunction) -> None:
        self.types = {}
        for p in fn.params:
            self.define(p.name, p.type, fn.line, 1)

    def define(self, name: str, type_: str, line: int, column: int) -> None:
        if name in self.types:
            raise Redefinition(f"%{name} is assigned twice", line, column)
        self.types[name] = type_

    def check(self, instr: IrInstr) -> None:
        for name in instr.names:
            if name not in self.types:
                raise UseBeforeDef(f"%{name} used before definition", instr.line, instr.column)
            if self.types[name] != instr.type:
                raise TypeMismatch(
                    f"%{name} is {self.types[name]}, instruction is {instr.type}", instr.line, instr.column
                )
        width = TYPES[instr.type]
        literals = [o for o in instr.operands if isinstance(o, int)]
        match instr.opcode:
            case "const":
                if len(instr.operands) != 1 or not literals:
                    raise IrSyntaxError("const takes one integer", instr.line, instr.column)
                if literals[0] >= 1 << width:
                    raise TypeMismatch(f"{literals[0]} does not fit {instr.type}", instr.line, instr.column)
            case "ret":
                if literals:
                    raise IrSyntaxError("ret takes value names only", instr.line, instr.column)
            case "call":
                self._check_call(instr)
            case _:
                if len(instr.operands) != 2 or literals:
                    raise IrSyntaxError(f"{instr.opcode} takes two value names", instr.line, instr.column)
        if instr.result is not None:
            self.define(instr.result, instr.type, instr.line, instr.column)

    def _check_call(self, instr: IrInstr) -> None:
        callee = instr.callee or ""
        if not callee.startswith(INTRINSIC_PREFIX) or callee[len(INTRINSIC_PREFIX) :] not in INTRINSICS:
            raise IrSyntaxError(f"unknown callee @{callee}", instr.line, instr.column)
        op = callee[len(INTRINSIC_PREFIX) :]
        literals = [o for o in instr.operands if isinstance(o, int)]
        if op == "literal":
            if len(literals) != len(instr.operands):
                raise IrSyntaxError("@rnc.literal takes integer components", instr.line, instr.column)
        elif literals:
            raise IrSyntaxError(f"@{callee} takes value names only", instr.line, instr.column)
        elif len(instr.operands) != (2 if op in SUPPORTED_OPS else 1):
            raise IrSyntaxError(f"wrong operand count for @{callee}", instr.line, instr.column)


def parse_ir(text: str) -> IrModule:
    module = IrModule([])
    current: IrFunction | None = None
    checker: _FunctionChecker | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped.startswith(";!"):
            if current is not None or module.functions:
                raise IrSyntaxError("pragma must precede every function", lineno, 1)
            for item in stripped[2:].split():
                key, sep, value = item.partition("=")
                if not sep:
                    raise IrSyntaxError(f"bad pragma entry {item!r}", lineno, raw.index(item) + 1)
                module.pragma[key] = value
            continue
        code = raw.split(";", 1)[0].rstrip()
        if not code.strip():
            continue
        indent = len(code) - len(code.lstrip())
        code = code.strip()
        column = indent + 1

        if current is None:
            match = _FUNC_RE.match(code)
            if not match:
                raise IrSyntaxError(f"expected 'func', got {code.split()[0]!r}", lineno, column)
            params = []
            if match.group(2).strip():
                for part in match.group(2).split(","):
                    pm = _PARAM_RE.match(part.strip())
                    if not pm:
                        raise IrSyntaxError(f"bad parameter {part.strip()!r}", lineno, column)
                    params.append(IrParam(pm.group(1), _check_type(pm.group(2), lineno, column)))
            current = IrFunction(match.group(1), params, [], lineno)
            checker = _FunctionChecker(current)
            continue

        if code == "}":
            if not current.body or current.body[-1].opcode != "ret":
                raise IrSyntaxError(f"@{current.name} does not end with ret", lineno, column)
            module.functions.append(current)
            current = checker = None
            continue

        instr = _parse_instr(code, lineno, column)
        if current.body and current.body[-1].opcode == "ret":
            raise IrSyntaxError("instruction after ret", lineno, column)
        checker.check(instr)
        current.body.append(instr)

    if current is not None:
        raise IrSyntaxError(f"@{current.name} is missing its closing brace", len(text.splitlines()) + 1, 1)
    return module


def _parse_instr(code: str, lineno: int, column: int) -> IrInstr:
    ret = _RET_RE.match(code)
    if ret:
        type_ = _check_type(ret.group(1), lineno, column + 4)
        operands = _parse_operands(ret.group(2), lineno, column + ret.start(2))
        return IrInstr(None, "ret", type_, operands, line=lineno, column=column)

    match = _INSTR_RE.match(code)
    if not match:
        raise IrSyntaxError(f"cannot parse {code!r}", lineno, column)
    result, opcode, type_token, rest = match.groups()
    if opcode not in OPCODES or opcode == "ret":
        raise IrSyntaxError(f"unknown opcode {opcode!r}", lineno, column + match.start(2))
    type_ = _check_type(type_token, lineno, column + match.start(3))
    callee = None
    rest_column = column + match.start(4)
    if opcode == "call":
        cm = _CALLEE_RE.match(rest)
        if not cm:
            raise IrSyntaxError("call needs a callee", lineno, rest_column)
        callee = cm.group(1)
        rest_column += cm.start(2)
        rest = cm.group(2)
    if not rest.strip():
        raise IrSyntaxError(f"{opcode} needs operands", lineno, rest_column)
    operands = _parse_operands(rest, lineno, rest_column)
    return IrInstr(result, opcode, type_, operands, callee, lineno, column)


def _format_operand(o: Operand) -> str:
    return str(o) if isinstance(o, int) else f"%{o}"


def format_instr(instr: IrInstr) -> str:
    operands = ", ".join(_format_operand(o) for o in instr.names)
    if instr.opcode == "ret":
        return f"ret {instr.type} {operands}"
    if instr.opcode == "call":
        return f"%{instr.result} = call {instr.type} @{instr.callee} {operands}"
    return f"%{instr.result} = {instr.opcode} {instr.type} {operands}"


def print_ir(module: IrModule) -> str:
    lines = []
    if module.pragma:
        lines.append(";! " + " ".join(f"{k}={v}" for k, v in module.pragma.items()))
    for i, fn in enumerate(module.functions):
        if i:
            lines.append("")
        params = ", ".join(f"%{p.name}: {p.type}" for p in fn.params)
        lines.append(f"func @{fn.name}({params}) {{")
        lines.extend(f"  {format_instr(instr)}" for instr in fn.body)
        lines.append("}")
    return "\n".join(lines) + "\n"


# analysis


def _function_taint(fn: IrFunction) -> frozenset[str]:
    tainted = {p.name for p in fn.params if p.name.startswith(TAINT_PREFIX)}
    changed = True
    while changed:
        changed = False
        for instr in fn.body:
            if instr.result is None or instr.result in tainted:
                continue
            if instr.result.startswith(TAINT_PREFIX) or any(n in tainted for n in instr.names):
                tainted.add(instr.result)
                changed = True
    return frozenset(tainted)


def propagate_taint(module: IrModule) -> TaintSet:
    return TaintSet({fn.name: _function_taint(fn) for fn in module.functions})


def select_moduli(bit_width: int, count: int = 2) -> ModuliSet:
    """
    Smallest greedy coprime set whose product covers ``2**bit_width``.

    The scan starts at ``2**ceil(bit_width / count)`` and takes each next
    integer coprime to everything already chosen.
    """
    if bit_width < 1 or count < 1:
        raise OutOfRange(f"cannot select {count} moduli for width {bit_width}")
    chosen: list[int] = []
    candidate = max(2, 1 << math.ceil(bit_width / count))
    while len(chosen) < count:
        if all(math.gcd(candidate, c) == 1 for c in chosen):
            chosen.append(candidate)
        candidate += 1
    moduli = make_moduli_set(chosen)
    logger.debug("selected moduli %s for width %d", moduli, bit_width)
    return moduli


def required_width(module: IrModule, taint: TaintSet | None = None) -> int:
    """Bits the dynamic range must cover: the widest tainted type, doubled under a tainted mul."""
    taint = taint or propagate_taint(module)
    needed = 0
    for fn in module.functions:
        names = taint.of(fn.name)
        for p in fn.params:
            if p.name in names:
                needed = max(needed, TYPES[p.type])
        for instr in fn.body:
            if instr.result in names or any(n in names for n in instr.names):
                width = TYPES[instr.type]
                needed = max(needed, 2 * width if instr.opcode == "mul" else width)
    return needed


def moduli_for_module(module: IrModule) -> ModuliSet | None:
    needed = required_width(module)
    if not needed:
        return None
    return select_moduli(needed, max(2, math.ceil(needed / 31)))


# transformation


def _compile_time_literal(value: int, moduli: ModuliSet, rng: random.Random) -> tuple[int, ...]:
    # r == value // m would reproduce the plain constant, so it is skipped
    components = []
    for m in moduli.moduli:
        forbidden = value // m
        if 1 <= forbidden < SHIFT_MULTIPLIER_BOUND:
            r = rng.randrange(1, SHIFT_MULTIPLIER_BOUND - 1)
            if r >= forbidden:
                r += 1
        else:
            r = rng.randrange(1, SHIFT_MULTIPLIER_BOUND)
        components.append(value % m + r * m)
    return tuple(components)


@dataclass
class _Rewriter:
    fn: IrFunction
    taint: frozenset[str]
    moduli: ModuliSet
    rng: random.Random
    stats: dict[str, int]
    body: list[IrInstr] = field(default_factory=list)
    encoded: dict[str, str] = field(default_factory=dict)
    aliases: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.taken = {p.name for p in self.fn.params} | {i.result for i in self.fn.body if i.result}

    def fresh(self, base: str, suffix: str) -> str:
        name, n = f"{base}_{suffix}", 1
        while name in self.taken:
            name, n = f"{base}_{suffix}{n}", n + 1
        self.taken.add(name)
        return name

    def call(self, result: str, type_: str, op: str, operands: Sequence[Operand]) -> None:
        self.body.append(IrInstr(result, "call", type_, tuple(operands), f"{INTRINSIC_PREFIX}{op}"))

    def encoded_operand(self, name: str, type_: str) -> str:
        if name in self.encoded:
            return self.encoded[name]
        if name not in self.aliases:
            self.aliases[name] = self.fresh(name, "e")
            self.call(self.aliases[name], type_, "encode", [name])
            self.stats["encoded"] += 1
        return self.aliases[name]

    def plain_operand(self, name: str, type_: str) -> str:
        if name not in self.encoded:
            return name
        plain = self.fresh(name, "d")
        self.call(plain, type_, "decode", [self.encoded[name]])
        self.stats["decoded"] += 1
        return plain

    def run(self) -> IrFunction:
        for p in self.fn.params:
            if p.name in self.taint:
                alias = self.fresh(p.name, "e")
                self.call(alias, p.type, "encode", [p.name])
                self.encoded[p.name] = alias
        for instr in self.fn.body:
            self.rewrite(instr)
        return IrFunction(self.fn.name, list(self.fn.params), self.body, self.fn.line)

    def rewrite(self, instr: IrInstr) -> None:
        type_ = instr.type
        if instr.opcode == "ret":
            operands = tuple(self.plain_operand(o, type_) for o in instr.names)
            self.body.append(replace(instr, operands=operands))
            return
        if instr.result not in self.taint:
            self.body.append(instr)
            return

        if instr.opcode == "const":
            self.call(instr.result, type_, "literal", _compile_time_literal(instr.operands[0], self.moduli, self.rng))
            self.stats["constants"] += 1
        elif instr.opcode in SUPPORTED_OPS:
            operands = [self.encoded_operand(o, type_) for o in instr.names]
            self.call(instr.result, type_, instr.opcode, operands)
            self.stats["rewritten"] += 1
        else:
            # stays plain until a supported op consumes it
            operands = tuple(self.plain_operand(o, type_) for o in instr.names)
            self.body.append(IrInstr(instr.result, instr.opcode, type_, operands))
            self.stats["deferred"] += 1
            return
        self.encoded[instr.result] = instr.result


def transform(
    module: IrModule,
    moduli: ModuliSet | None = None,
    rng: random.Random | None = None,
    *,
    seed: int | None = None,
) -> IrModule:
    """
    Rewrite sensitive computations onto residue-coded intrinsics.

    A module without sensitive names is returned unchanged. The chosen
    moduli (and the seed, when given) are recorded in the header pragma.
    """
    for fn in module.functions:
        for instr in fn.body:
            if instr.opcode == "call":
                raise IrError(f"@{fn.name} already contains intrinsic calls", instr.line, instr.column)

    taint = propagate_taint(module)
    if not taint.names:
        return module

    needed = required_width(module, taint)
    moduli = moduli or moduli_for_module(module)
    if moduli.dynamic_range < 1 << needed:
        raise OutOfRange(f"moduli {moduli} cover fewer than {needed} bits")
    rng = rng or random.Random(seed)

    stats = {"rewritten": 0, "encoded": 0, "decoded": 0, "constants": 0, "deferred": 0}
    functions = [
        _Rewriter(fn, taint.of(fn.name), moduli, rng, stats).run() for fn in module.functions
    ]
    pragma = {"moduli": str(moduli)}
    if seed is not None:
        pragma["seed"] = str(seed)
    logger.debug(
        "transform: %(rewritten)d rewritten, %(encoded)d encodes, %(decoded)d decodes,"
        " %(constants)d constants, %(deferred)d left plain",
        stats,
    )
    return IrModule(functions, pragma)


# interpretation


class _Intrinsics:
    """Residue-coded intrinsics reduced to the instruction width."""

    def __init__(self, moduli: ModuliSet, rng: random.Random | None) -> None:
        self.moduli = moduli
        self.rng = rng

    def constant(self, v: int) -> EncodedValue:
        return encode(v, self.moduli)

    def add(self, a: EncodedValue, b: EncodedValue, width: int) -> EncodedValue:
        s = add_enc(a, b, self.moduli)
        modulus = 1 << width
        if self.moduli.dynamic_range == modulus:
            return s
        if less_than(s, a, self.moduli):
            return add_enc(s, self.constant(self.moduli.dynamic_range - modulus), self.moduli)
        if not less_than(s, self.constant(modulus), self.moduli):
            return sub_enc(s, self.constant(modulus), self.moduli)
        return s

    def sub(self, a: EncodedValue, b: EncodedValue, width: int) -> EncodedValue:
        d = sub_enc(a, b, self.moduli)
        if less_than(a, b, self.moduli):
            return sub_enc(d, self.constant(self.moduli.dynamic_range - (1 << width)), self.moduli)
        return d

    def mul(self, a: EncodedValue, b: EncodedValue, width: int) -> EncodedValue:
        if self.moduli.dynamic_range < 1 << (2 * width):
            raise Trap(f"moduli {self.moduli} cannot hold a {width}-bit product")
        return mod_enc(mul_enc(a, b, self.moduli), self.constant(1 << width), self.moduli)

    def call(self, op: str, args: list[object], width: int) -> EncodedValue | int:
        if op == "literal":
            if len(args) != self.moduli.count:
                raise Trap(f"literal has {len(args)} components for {self.moduli.count} moduli")
            return EncodedValue(tuple(args), self.moduli.identity)
        if op == "encode":
            return encode(self._plain(args[0]), self.moduli, self.rng)
        encoded = [self._encoded(a) for a in args]
        match op:
            case "decode":
                return decode(encoded[0], self.moduli)
            case "add" | "sub" | "mul":
                result = getattr(self, op)(encoded[0], encoded[1], width)
            case "eq":
                result = self.constant(int(eq_enc(encoded[0], encoded[1], self.moduli)))
            case "ne":
                result = self.constant(int(not eq_enc(encoded[0], encoded[1], self.moduli)))
            case _:
                raise Trap(f"unknown intrinsic {op}")
        return add_random_shift(result, self.moduli, self.rng)

    def _plain(self, value: object) -> int:
        if not isinstance(value, int):
            raise Trap("intrinsic expected a plain value")
        return value

    def _encoded(self, value: object) -> EncodedValue:
        if not isinstance(value, EncodedValue):
            raise Trap("intrinsic expected an encoded value")
        return value


def _plain_op(opcode: str, a: int, b: int, width: int) -> int:
    mask = (1 << width) - 1
    match opcode:
        case "add":
            return (a + b) & mask
        case "sub":
            return (a - b) & mask
        case "mul":
            return (a * b) & mask
        case "div":
            if b == 0:
                raise Trap("division by zero")
            return a // b
        case "xor":
            return a ^ b
        case "shl":
            return (a << b) & mask if b < width else 0
        case "eq":
            return int(a == b)
        case "ne":
            return int(a != b)
    raise Trap(f"cannot evaluate {opcode}")


def interpret(
    module: IrModule,
    inputs: Sequence[int] | Mapping[str, int],
    *,
    function: str | None = None,
    moduli: ModuliSet | None = None,
    rng: random.Random | None = None,
) -> list[int]:
    fn = module.function(function)
    if isinstance(inputs, Mapping):
        missing = [p.name for p in fn.params if p.name not in inputs]
        if missing:
            raise IrError(f"missing inputs: {', '.join(missing)}")
        args = [inputs[p.name] for p in fn.params]
    else:
        args = list(inputs)
    if len(args) != len(fn.params):
        raise IrError(f"@{fn.name} takes {len(fn.params)} inputs, got {len(args)}")

    env: dict[str, object] = {}
    for p, v in zip(fn.params, args):
        if not 0 <= v < 1 << TYPES[p.type]:
            raise TypeMismatch(f"input {v} does not fit {p.type} %{p.name}")
        env[p.name] = v

    intrinsics: _Intrinsics | None = None
    if any(instr.opcode == "call" for instr in fn.body):
        if moduli is None:
            if "moduli" not in module.pragma:
                raise Trap("intrinsic calls need a moduli pragma")
            moduli = parse_moduli(module.pragma["moduli"])
        intrinsics = _Intrinsics(moduli, rng)

    for instr in fn.body:
        width = TYPES[instr.type]
        values = [env[o] if isinstance(o, str) else o for o in instr.operands]
        match instr.opcode:
            case "ret":
                if not all(isinstance(v, int) for v in values):
                    raise Trap("returned value is still encoded", instr.line, instr.column)
                return values
            case "const":
                env[instr.result] = values[0]
            case "call":
                env[instr.result] = intrinsics.call(instr.callee[len(INTRINSIC_PREFIX) :], values, width)
            case _:
                if not all(isinstance(v, int) for v in values):
                    raise Trap(f"{instr.opcode} on an encoded value", instr.line, instr.column)
                env[instr.result] = _plain_op(instr.opcode, values[0], values[1], width)
    raise Trap(f"@{fn.name} fell off the end")
