"""Reduced profile equation f'' = (eps_t + eps f'^2)(1 - h(s) f')."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Signature:
    """Metric signs: ``epsilon`` of <dt, dt> and ``epsilon_tilde`` of |grad pi|^2."""

    epsilon: int = 1
    epsilon_tilde: int = 1

    def __post_init__(self) -> None:
        for name in ("epsilon", "epsilon_tilde"):
            value = getattr(self, name)
            if value not in (1, -1) or isinstance(value, bool):
                raise ValueError(f"{name} must be +1 or -1, got {value!r}")
            object.__setattr__(self, name, int(value))

    @property
    def product(self) -> int:
        return self.epsilon * self.epsilon_tilde

    def as_dict(self) -> dict[str, int]:
        return {"epsilon": self.epsilon, "epsilon_tilde": self.epsilon_tilde}


@dataclass(frozen=True)
class ProfileState:
    s: float
    w: float
    f: float


def rhs_reduced(sig: Signature, h_val: float, w: float) -> float:
    return (sig.epsilon_tilde + sig.epsilon * w * w) * (1.0 - h_val * w)


def rhs_system(sig: Signature, h_val: float, state: ProfileState) -> tuple[float, float]:
    """Return ``(df/ds, dw/ds)``; the first entry is ``state.w`` unchanged."""
    return state.w, rhs_reduced(sig, h_val, state.w)
