"""
Circuit elements and the Circuit composite.

Elements read and write named ports of a field table (port name -> ModeExpr).
A Circuit applies its children in insertion order and can itself be nested.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import TYPE_CHECKING

from app.core.exceptions import DomainError
from app.services.gaussian import ModeExpr
from app.services.optics import (
    apply_balanced_split,
    apply_beamsplitter,
    apply_bell_feedforward,
    apply_loss,
)

if TYPE_CHECKING:
    from app.core.patterns.visitor import ElementVisitor

FieldTable = dict[str, ModeExpr]


def _port(fields: FieldTable, name: str) -> ModeExpr:
    try:
        return fields[name]
    except KeyError:
        raise DomainError(f"Circuit has no port named {name!r}") from None


class Element(ABC):
    def __init__(self, name: str):
        self.name = name

    @abstractmethod
    def apply(self, fields: FieldTable) -> FieldTable:
        pass

    @abstractmethod
    def accept(self, visitor: ElementVisitor) -> None:
        pass

    def consumed_vacua(self) -> list[str]:
        """Ports holding fresh vacua that this element mixes in."""
        return []


class BeamSplitter(Element):
    def __init__(self, a: str, b: str, R: float, out_t: str, out_r: str, name: str = "BS"):
        super().__init__(name)
        if not math.isfinite(R) or not 0.0 <= R <= 1.0:
            raise DomainError(f"Reflectivity R must lie in [0, 1], got {R}")
        self.a = a
        self.b = b
        self.R = R
        self.out_t = out_t
        self.out_r = out_r

    def apply(self, fields: FieldTable) -> FieldTable:
        t, r = apply_beamsplitter(_port(fields, self.a), _port(fields, self.b), self.R)
        fields = dict(fields)
        fields[self.out_t] = t.with_label(self.out_t)
        fields[self.out_r] = r.with_label(self.out_r)
        return fields

    def accept(self, visitor: ElementVisitor) -> None:
        visitor.visit_beamsplitter(self)


class BellFeedforward(Element):
    def __init__(
        self,
        transmitted: str,
        reflected: str,
        epr_half: str,
        g: float,
        output: str,
        name: str = "Bell feedforward",
    ):
        super().__init__(name)
        if not math.isfinite(g):
            raise DomainError(f"Feedforward gain must be finite, got {g}")
        self.transmitted = transmitted
        self.reflected = reflected
        self.epr_half = epr_half
        self.g = g
        self.output = output

    def apply(self, fields: FieldTable) -> FieldTable:
        displaced = apply_bell_feedforward(
            _port(fields, self.transmitted),
            _port(fields, self.reflected),
            _port(fields, self.epr_half),
            self.g,
        )
        fields = dict(fields)
        fields[self.output] = displaced.with_label(self.output)
        return fields

    def accept(self, visitor: ElementVisitor) -> None:
        visitor.visit_bell_feedforward(self)


class Loss(Element):
    def __init__(self, mode: str, eta: float, fresh_vacuum: str, name: str = "Loss"):
        super().__init__(name)
        if not math.isfinite(eta) or not 0.0 < eta <= 1.0:
            raise DomainError(f"Transmission eta must lie in (0, 1], got {eta}")
        self.mode = mode
        self.eta = eta
        self.fresh_vacuum = fresh_vacuum

    def apply(self, fields: FieldTable) -> FieldTable:
        lossy = apply_loss(_port(fields, self.mode), self.eta, _port(fields, self.fresh_vacuum))
        fields = dict(fields)
        fields[self.mode] = lossy.with_label(self.mode)
        return fields

    def consumed_vacua(self) -> list[str]:
        return [self.fresh_vacuum]

    def accept(self, visitor: ElementVisitor) -> None:
        visitor.visit_loss(self)


class BalancedSplit(Element):
    def __init__(self, input: str, ancillas: list[str], outputs: list[str], name: str = "Splitter"):
        super().__init__(name)
        if len(outputs) != len(ancillas) + 1:
            raise DomainError(
                f"A splitter with {len(outputs)} outputs needs {len(outputs) - 1} "
                f"ancillas, got {len(ancillas)}"
            )
        self.input = input
        self.ancillas = list(ancillas)
        self.outputs = list(outputs)

    def apply(self, fields: FieldTable) -> FieldTable:
        split = apply_balanced_split(
            _port(fields, self.input), [_port(fields, a) for a in self.ancillas]
        )
        fields = dict(fields)
        for name, expr in zip(self.outputs, split):
            fields[name] = expr.with_label(name)
        return fields

    def consumed_vacua(self) -> list[str]:
        return list(self.ancillas)

    def accept(self, visitor: ElementVisitor) -> None:
        visitor.visit_balanced_split(self)


class Circuit(Element):
    def __init__(self, name: str = "circuit"):
        super().__init__(name)
        self._children: list[Element] = []

    def add(self, element: Element) -> None:
        self._children.append(element)

    def get_children(self) -> list[Element]:
        return self._children.copy()

    def consumed_vacua(self) -> list[str]:
        consumed: list[str] = []
        for child in self._children:
            consumed.extend(child.consumed_vacua())
        return consumed

    def validate(self) -> None:
        """Reject circuits that mix the same fresh vacuum in more than once."""
        from app.core.patterns.visitor import VacuumConsumptionVisitor

        audit = VacuumConsumptionVisitor()
        self.accept(audit)
        if audit.reused:
            raise DomainError(
                f"Fresh vacua consumed by more than one element: {', '.join(audit.reused)}"
            )

    def apply(self, fields: FieldTable) -> FieldTable:
        self.validate()
        for child in self._children:
            fields = child.apply(fields)
        return fields

    def accept(self, visitor: ElementVisitor) -> None:
        visitor.visit_circuit(self)
        for child in self._children:
            child.accept(visitor)
