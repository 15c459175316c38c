from __future__ import annotations

from abc import ABC, abstractmethod
from collections import Counter
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from app.core.patterns.composite import (
        BalancedSplit,
        BeamSplitter,
        BellFeedforward,
        Circuit,
        Loss,
    )


class ElementVisitor(ABC):
    @abstractmethod
    def visit_beamsplitter(self, element: BeamSplitter) -> None:
        pass

    @abstractmethod
    def visit_bell_feedforward(self, element: BellFeedforward) -> None:
        pass

    @abstractmethod
    def visit_loss(self, element: Loss) -> None:
        pass

    @abstractmethod
    def visit_balanced_split(self, element: BalancedSplit) -> None:
        pass

    @abstractmethod
    def visit_circuit(self, element: Circuit) -> None:
        pass


class CircuitReportVisitor(ElementVisitor):
    """Visitor that collects a description of each element for ``--show-circuit``.

    Nested circuits are flattened in visiting order.
    """

    def __init__(self):
        self.elements: list[dict] = []

    def _record(self, kind: str, name: str, **details) -> None:
        self.elements.append({"kind": kind, "name": name, **details})

    def visit_beamsplitter(self, element: BeamSplitter) -> None:
        self._record(
            "beamsplitter", element.name,
            inputs=[element.a, element.b], outputs=[element.out_t, element.out_r],
            R=element.R,
        )

    def visit_bell_feedforward(self, element: BellFeedforward) -> None:
        self._record(
            "bell-feedforward", element.name,
            inputs=[element.transmitted, element.reflected, element.epr_half],
            outputs=[element.output], g=element.g,
        )

    def visit_loss(self, element: Loss) -> None:
        self._record(
            "loss", element.name,
            inputs=[element.mode, element.fresh_vacuum], outputs=[element.mode],
            eta=element.eta,
        )

    def visit_balanced_split(self, element: BalancedSplit) -> None:
        self._record(
            "balanced-split", element.name,
            inputs=[element.input, *element.ancillas], outputs=list(element.outputs),
        )

    def visit_circuit(self, element: Circuit) -> None:
        self._record("circuit", element.name, children=len(element.get_children()))

    def get_report(self) -> str:
        lines = []
        for item in self.elements:
            if item["kind"] == "circuit":
                lines.append(f"Circuit: {item['name']} ({item['children']} elements)")
                lines.append("-" * 60)
                continue
            params = ", ".join(
                f"{key}={item[key]:.6g}" for key in ("R", "eta", "g") if key in item
            )
            lines.append(
                f"  - {item['kind']:<17} {item['name']:<18} | "
                f"{', '.join(item['inputs'])} -> {', '.join(item['outputs'])}"
                + (f" | {params}" if params else "")
            )
        return "\n".join(lines)


class VacuumConsumptionVisitor(ElementVisitor):
    """Counts how often each fresh vacuum port is mixed in."""

    def __init__(self):
        self.counts: Counter[str] = Counter()

    def visit_beamsplitter(self, element: BeamSplitter) -> None:
        pass

    def visit_bell_feedforward(self, element: BellFeedforward) -> None:
        pass

    def visit_loss(self, element: Loss) -> None:
        self.counts.update(element.consumed_vacua())

    def visit_balanced_split(self, element: BalancedSplit) -> None:
        self.counts.update(element.consumed_vacua())

    def visit_circuit(self, element: Circuit) -> None:
        pass

    @property
    def reused(self) -> list[str]:
        return sorted(port for port, count in self.counts.items() if count > 1)
