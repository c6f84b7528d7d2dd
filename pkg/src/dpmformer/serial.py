"""Strict dataclass <-> plain-dict conversion for configs.

Unknown keys are rejected and every violation is reported with its
dotted path, so a config typo never silently flips an ablation flag.
"""

from __future__ import annotations

import dataclasses
import typing

from .errors import ConfigError


def to_plain(obj):
    """Dataclass tree -> JSON-friendly plain data (tuples become lists)."""
    if dataclasses.is_dataclass(obj):
        return {f.name: to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, dict):
        return {k: to_plain(v) for k, v in obj.items()}
    return obj


def from_plain(cls, doc, path: str = "", _errors=None):
    """Parse ``doc`` into dataclass ``cls``; raises ConfigError listing
    every violation found anywhere in the tree."""
    root = _errors is None
    errors: list[str] = [] if root else _errors
    value = _parse(cls, doc, path or cls.__name__, errors)
    if root and errors:
        raise ConfigError(errors)
    return value


def _parse(tp, doc, path, errors):
    origin = typing.get_origin(tp)
    if origin is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if doc is None:
            if len(args) < len(typing.get_args(tp)):
                return None
            errors.append(f"{path}: may not be null")
            return None
        return _parse(args[0], doc, path, errors)

    if dataclasses.is_dataclass(tp):
        if not isinstance(doc, dict):
            errors.append(f"{path}: expected an object, got {type(doc).__name__}")
            return None
        fields = {f.name: f for f in dataclasses.fields(tp)}
        hints = typing.get_type_hints(tp)
        for key in doc:
            if key not in fields:
                errors.append(f"{path}.{key}: unknown key")
        kwargs = {}
        for name, f in fields.items():
            if name in doc:
                kwargs[name] = _parse(hints[name], doc[name], f"{path}.{name}", errors)
            elif f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
                errors.append(f"{path}.{name}: required key missing")
        if errors:
            return None
        return tp(**kwargs)

    if origin in (tuple, list):
        if not isinstance(doc, (list, tuple)):
            errors.append(f"{path}: expected a list, got {type(doc).__name__}")
            return None
        args = typing.get_args(tp)
        if origin is tuple and len(args) and args[-1] is not Ellipsis:
            if len(doc) != len(args):
                errors.append(f"{path}: expected {len(args)} entries, got {len(doc)}")
                return None
            return tuple(
                _parse(a, v, f"{path}[{i}]", errors) for i, (a, v) in enumerate(zip(args, doc))
            )
        elem = args[0] if args else float
        seq = [_parse(elem, v, f"{path}[{i}]", errors) for i, v in enumerate(doc)]
        return tuple(seq) if origin is tuple else seq

    if tp is bool:
        if not isinstance(doc, bool):
            errors.append(f"{path}: expected a bool, got {type(doc).__name__}")
            return None
        return doc
    if tp is int:
        if isinstance(doc, bool) or not isinstance(doc, int):
            errors.append(f"{path}: expected an int, got {type(doc).__name__}")
            return None
        return doc
    if tp is float:
        if isinstance(doc, bool) or not isinstance(doc, (int, float)):
            errors.append(f"{path}: expected a number, got {type(doc).__name__}")
            return None
        return float(doc)
    if tp is str:
        if not isinstance(doc, str):
            errors.append(f"{path}: expected a string, got {type(doc).__name__}")
            return None
        return doc
    errors.append(f"{path}: unsupported config type {tp!r}")
    return None
