"""
Schemas of the JSON input formats.

Exact numbers are accepted as integers or "p/q" strings.
"""
from fractions import Fraction
from typing import List, Optional, Union

from pydantic import BaseModel, Field, validator

from src.fans import Fan
from src.lg_mirror import LGPotential
from src.polytopes import LatticePolytope, convex_hull
from src.testconfig import (
    ToricTestConfiguration, degeneration_to_normal_cone, product_test_configuration,
    trivial_test_configuration,
)
from src.toric_geom import ToricDivisor
from src.utils import to_fraction

ExactNumber = Union[int, str]

TEST_CONFIGURATION_KINDS = ['normal_cone', 'product', 'trivial']


def _exact(v):
    try:
        return to_fraction(v)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ValueError(f'{v!r} is not an exact rational')


class FanValidator(BaseModel):
    rays: List[List[int]] = Field(min_items=1)
    max_cones: List[List[int]] = Field(min_items=1)

    @validator('rays')
    def validate_rays(cls, v):
        dims = {len(r) for r in v}
        if len(dims) != 1 or 0 in dims:
            raise ValueError('rays must be nonzero vectors of one common dimension')
        return v

    @validator('max_cones')
    def validate_cones(cls, v, values):
        if 'rays' in values:
            n = len(values['rays'])
            if any(i < 0 or i >= n for c in v for i in c):
                raise ValueError('max_cones refer to missing rays')
        return v

    def build(self) -> Fan:
        return Fan(tuple(tuple(r) for r in self.rays), tuple(tuple(c) for c in self.max_cones),
                   len(self.rays[0]))


class PolytopeValidator(BaseModel):
    vertices: List[List[ExactNumber]] = Field(min_items=1)

    @validator('vertices')
    def validate_vertices(cls, v):
        if len({len(p) for p in v}) != 1:
            raise ValueError('vertices must share one dimension')
        return [[_exact(x) for x in p] for p in v]

    def build(self) -> LatticePolytope:
        return convex_hull(self.vertices)


class PotentialTermValidator(BaseModel):
    exp: List[int] = Field(min_items=1)
    log_coeff: ExactNumber = 0
    mantissa: ExactNumber = 1

    @validator('log_coeff', 'mantissa')
    def validate_exact(cls, v):
        _exact(v)
        return v

    @validator('mantissa')
    def validate_mantissa(cls, v):
        if _exact(v) == 0:
            raise ValueError('mantissa must be nonzero')
        return v


class PotentialValidator(BaseModel):
    k: ExactNumber = 1
    terms: List[PotentialTermValidator] = Field(min_items=1)

    @validator('k')
    def validate_k(cls, v):
        if _exact(v) <= 0:
            raise ValueError('k must be positive')
        return v

    @validator('terms')
    def validate_terms(cls, v):
        if len({len(t.exp) for t in v}) != 1:
            raise ValueError('exponents must share one dimension')
        if len({tuple(t.exp) for t in v}) != len(v):
            raise ValueError('exponents must be distinct')
        return v

    def build(self) -> LGPotential:
        terms = tuple((tuple(t.exp), _exact(t.log_coeff)) for t in self.terms)
        mantissas = tuple(_exact(t.mantissa) for t in self.terms)
        return LGPotential(terms, _exact(self.k), len(self.terms[0].exp), mantissas)


class ToricTestConfigurationValidator(BaseModel):
    """
    A test configuration either built from a fibre (normal_cone, trivial)
    or given by its total fan and functional (product).
    """
    kind: str
    name: str = ''
    fan: FanValidator
    polarisation: List[ExactNumber]
    functional: Optional[List[int]] = None
    center: Optional[List[int]] = None
    r: ExactNumber = 0
    base_axis: int = Field(default=0, ge=0)

    @validator('kind')
    def validate_kind(cls, v):
        if v not in TEST_CONFIGURATION_KINDS:
            raise ValueError(f'kind must be one of {TEST_CONFIGURATION_KINDS}')
        return v

    @validator('polarisation')
    def validate_polarisation(cls, v, values):
        if 'fan' in values and len(v) != len(values['fan'].rays):
            raise ValueError('polarisation needs one coefficient per ray')
        return [_exact(x) for x in v]

    @validator('functional', always=True)
    def validate_functional(cls, v, values):
        if values.get('kind') == 'product' and not v:
            raise ValueError('a product configuration needs its functional')
        return v

    @validator('center', always=True)
    def validate_center(cls, v, values):
        if values.get('kind') == 'normal_cone' and not v:
            raise ValueError('a degeneration to the normal cone needs its centre')
        return v

    @validator('r')
    def validate_r(cls, v):
        if _exact(v) < 0:
            raise ValueError('r must be non-negative')
        return v

    def build(self) -> ToricTestConfiguration:
        fan = self.fan.build()
        L = ToricDivisor(fan, tuple(Fraction(a) for a in self.polarisation))
        if self.kind == 'product':
            return product_test_configuration(fan, self.functional, L, name=self.name or 'product')
        if self.kind == 'trivial':
            return trivial_test_configuration(fan, L, self.base_axis)
        return degeneration_to_normal_cone(fan, L, self.center, _exact(self.r), self.base_axis)
