"""Parameter containers and basic layers."""
from __future__ import annotations

from typing import Iterator

import numpy as np

from . import tensor as T
from .tensor import Parameter, Tensor


class Module:
    """Registers parameters and submodules in declaration order."""

    def __init__(self):
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_modules", {})

    def __setattr__(self, key, value):
        if isinstance(value, Parameter):
            self._params[key] = value
        elif isinstance(value, Module):
            self._modules[key] = value
        elif isinstance(value, list) and value and all(isinstance(v, Module) for v in value):
            value = ModuleList(value)
            self._modules[key] = value
        object.__setattr__(self, key, value)

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for k, p in self._params.items():
            yield prefix + k, p
        for k, m in self._modules.items():
            yield from m.named_parameters(prefix + k + ".")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


class ModuleList(Module, list):
    def __init__(self, items):
        Module.__init__(self)
        list.__init__(self, items)
        for i, m in enumerate(items):
            self._modules[str(i)] = m


def _uniform(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Linear(Module):
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, zero: bool = False):
        super().__init__()
        self.weight = Parameter(np.zeros((d_in, d_out)) if zero else _uniform(rng, d_in, (d_in, d_out)))
        self.bias = Parameter(np.zeros(d_out))

    def forward(self, x: Tensor) -> Tensor:
        return T.linear(x, self.weight, self.bias)


class Conv2d(Module):
    def __init__(self, c_in: int, c_out: int, k: int, rng: np.random.Generator, stride: int = 1, zero: bool = False):
        super().__init__()
        fan_in = c_in * k * k
        shape = (c_out, c_in, k, k)
        self.weight = Parameter(np.zeros(shape) if zero else _uniform(rng, fan_in, shape))
        self.bias = Parameter(np.zeros(c_out))
        self.stride = stride

    def forward(self, x: Tensor) -> Tensor:
        return T.conv2d(x, self.weight, self.bias, stride=self.stride)


class ChannelNorm(Module):
    """Per-channel standardization over spatial positions with learned scale/shift."""

    def __init__(self, c: int, eps: float = 1e-5):
        super().__init__()
        self.scale = Parameter(np.ones(c))
        self.shift = Parameter(np.zeros(c))
        self.eps = eps

    def forward(self, x: Tensor) -> Tensor:
        return T.add(T.mul(T.channel_standardize(x, self.eps), self.scale), self.shift)


class MLP(Module):
    """Two linear layers with a GELU in between."""

    def __init__(self, d_in: int, d_hidden: int, d_out: int, rng: np.random.Generator):
        super().__init__()
        self.fc1 = Linear(d_in, d_hidden, rng)
        self.fc2 = Linear(d_hidden, d_out, rng)

    def forward(self, x: Tensor) -> Tensor:
        return self.fc2(T.gelu(self.fc1(x)))
