# Copyright The mvseg Authors
# SPDX-License-Identifier: Apache-2.0
"""Mitral valve segmentation with two-stage geodesic active contours."""

import json

import numpy as np

from . import _core

__version__ = _core.__version__

Error = _core.Error
Error.code = property(lambda self: self.args[0])
Error.detail = property(lambda self: self.args[2] if len(self.args) > 2 else "")

set_worker_count = _core.set_worker_count
worker_count = _core.worker_count


def _dumps(obj):
    return obj if isinstance(obj, str) else json.dumps(obj)


def read_nrrd(data):
    """Returns (array indexed [i, j, k], geometry dict)."""
    array, geometry = _core.read_nrrd(bytes(data))
    return array, json.loads(geometry)


def write_nrrd(array, geometry, gzip=False):
    return _core.write_nrrd(np.asarray(array, dtype=np.float32), _dumps(geometry), gzip)


def write_mask_nrrd(mask, geometry):
    return _core.write_mask_nrrd(np.asarray(mask, dtype=np.uint8), _dumps(geometry))


def generate_phantom(spec=None):
    out = _core.generate_phantom(_dumps(spec or {}))
    for key in ("geometry", "annulus", "spec"):
        out[key] = json.loads(out[key])
    return out


def phantom_proximal_mesh(spec=None, edge_mm=0.25):
    return _core.phantom_proximal_mesh(_dumps(spec or {}), edge_mm)


def fit_annulus(definition):
    return json.loads(_core.fit_annulus(_dumps(definition)))


def compute_speed(array, geometry, sigma_mm=1.0, beta=None):
    """Returns (speed array, beta used)."""
    return _core.compute_speed(np.asarray(array, dtype=np.float32), _dumps(geometry), sigma_mm, beta)


def dice(a, b, geometry):
    return _core.dice(np.asarray(a, dtype=np.uint8), np.asarray(b, dtype=np.uint8), _dumps(geometry))


def masd(mesh_a, mesh_b):
    """Meshes are (vertices (n, 3), triangles (m, 3)) tuples."""
    return json.loads(_core.masd(mesh_a[0], mesh_a[1], mesh_b[0], mesh_b[1]))


def read_mesh(data, fmt):
    return _core.read_mesh(bytes(data), fmt)


def write_mesh(mesh, fmt):
    return _core.write_mesh(mesh[0], mesh[1], fmt)


class Session:
    """Interactive segmentation session; mirrors the HTTP session API."""

    def __init__(self, native):
        self._s = native

    @classmethod
    def from_nrrd(cls, data, config=None):
        return cls(_core.Session.from_nrrd(bytes(data), _dumps(config) if config else ""))

    @classmethod
    def from_phantom(cls, spec=None, config=None):
        return cls(_core.Session.from_phantom(_dumps(spec or {}), _dumps(config) if config else ""))

    @classmethod
    def load(cls, data):
        return cls(_core.Session.load(bytes(data)))

    def save(self):
        return self._s.save()

    @property
    def stage(self):
        return self._s.stage()

    def set_annulus(self, definition):
        return json.loads(self._s.set_annulus(_dumps(definition)))

    def step(self, stage, iterations, params=None):
        return json.loads(self._s.step(stage, iterations, _dumps(params) if params else ""))

    def undo(self):
        return json.loads(self._s.undo())

    def accept(self, stage):
        return self._s.accept(stage)

    def extract_surface(self):
        return json.loads(self._s.extract_surface())

    def summary(self):
        return json.loads(self._s.summary())

    def slice_png(self, axis, index, overlay="none"):
        return self._s.slice_png(axis, index, overlay)

    def export(self, what, ext):
        return self._s.export(what, ext)

    def phi(self, stage):
        return self._s.phi(stage)

    def proximal_mesh(self):
        return self._s.proximal_mesh()
