"""Tiny layer graph for numpy forward passes.

Every node can run forward on a (C, T) array, list its parameter shapes,
and propagate index intervals through itself. Interval propagation ignores
signal boundaries (an infinite signal), which is what latency and
receptive-field arithmetic needs.

``influence((a, b))`` gives the output indices touched by inputs ``a..b``;
``dependence((a, b))`` gives the input indices read by outputs ``a..b``.
"""
import numpy as np

from ..signal import ConvSpec, conv1d, conv1d_transposed


def _ceil_div(a, b):
    return -(-a // b)


def same_padding(kernel_size, dilation=1):
    total = dilation * (kernel_size - 1)
    return total // 2, total - total // 2


class Node:
    def params(self):
        return []

    def forward(self, x, weights):
        raise NotImplementedError

    def influence(self, interval):
        return interval

    def dependence(self, interval):
        return interval


class Conv(Node):
    def __init__(self, name, spec):
        self.name = name
        self.spec = spec

    def params(self):
        return [(f"{self.name}.weight", self.spec.weight_shape()),
                (f"{self.name}.bias", (self.spec.out_channels,))]

    def forward(self, x, weights):
        return conv1d(x, weights[f"{self.name}.weight"], weights[f"{self.name}.bias"], self.spec)

    def influence(self, interval):
        a, b = interval
        s, p, span = self.spec.stride, self.spec.padding[0], self.spec.span
        return _ceil_div(a + p - span + 1, s), (b + p) // s

    def dependence(self, interval):
        a, b = interval
        s, p, span = self.spec.stride, self.spec.padding[0], self.spec.span
        return a * s - p, b * s - p + span - 1


class ConvTranspose(Node):
    def __init__(self, name, spec):
        self.name = name
        self.spec = spec

    def params(self):
        return [(f"{self.name}.weight", self.spec.weight_shape(transposed=True)),
                (f"{self.name}.bias", (self.spec.out_channels,))]

    def forward(self, x, weights):
        return conv1d_transposed(x, weights[f"{self.name}.weight"], weights[f"{self.name}.bias"],
                                 self.spec)

    def influence(self, interval):
        a, b = interval
        s, p, span = self.spec.stride, self.spec.padding[0], self.spec.span
        return a * s - p, b * s - p + span - 1

    def dependence(self, interval):
        a, b = interval
        s, p, span = self.spec.stride, self.spec.padding[0], self.spec.span
        return _ceil_div(a + p - span + 1, s), (b + p) // s


class Activation(Node):
    def __init__(self, fn):
        self.fn = fn

    def forward(self, x, weights):
        return self.fn(x)


class SelectChannels(Node):
    """Keep channels ``[start, stop)``; indices in time are untouched."""

    def __init__(self, start, stop):
        self.start, self.stop = start, stop

    def forward(self, x, weights):
        return x[self.start:self.stop]


def elu(x):
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def leaky_relu(slope):
    return lambda x: np.where(x > 0, x, slope * x)


class Sequential(Node):
    def __init__(self, *nodes):
        self.nodes = list(nodes)

    def params(self):
        return [p for node in self.nodes for p in node.params()]

    def forward(self, x, weights):
        for node in self.nodes:
            x = node.forward(x, weights)
        return x

    def influence(self, interval):
        for node in self.nodes:
            interval = node.influence(interval)
        return interval

    def dependence(self, interval):
        for node in reversed(self.nodes):
            interval = node.dependence(interval)
        return interval


class Residual(Node):
    """``x + body(x)``; also used for U-Net skip additions."""

    def __init__(self, body):
        self.body = body

    def params(self):
        return self.body.params()

    def forward(self, x, weights):
        return x + self.body.forward(x, weights)

    def influence(self, interval):
        a, b = self.body.influence(interval)
        return min(a, interval[0]), max(b, interval[1])

    def dependence(self, interval):
        a, b = self.body.dependence(interval)
        return min(a, interval[0]), max(b, interval[1])


def conv(name, c_in, c_out, kernel_size, stride=1, dilation=1, groups=1, padding=None):
    if padding is None:
        padding = same_padding(kernel_size, dilation)
    return Conv(name, ConvSpec(c_in, c_out, kernel_size, stride, dilation, groups, padding))


def conv_transpose(name, c_in, c_out, kernel_size, stride, padding):
    return ConvTranspose(name, ConvSpec(c_in, c_out, kernel_size, stride, 1, 1, padding))
