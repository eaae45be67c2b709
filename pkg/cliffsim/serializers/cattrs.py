"""
Utilities to break down models (manifests, circuits, noise, results) into dicts of python builtin
types using `cattrs <https://cattrs.readthedocs.io>`_. This does the majority of the work needed
for any serialization format.

.. automodsumm:: cliffsim.serializers.cattrs
   :classes-only:
   :nosignatures:

.. automodsumm:: cliffsim.serializers.cattrs
   :functions-only:
   :nosignatures:
"""
from typing import Any, Callable, Dict, List, Mapping, MutableMapping, Optional, Union

import numpy as np
from attr import has
from cattr import GenConverter

from ..models import PauliObservable, PauliString
from .pipeline import Stage


class CattrStage(Stage):
    """Base serializer class that does pre/post-processing with ``cattrs``. This can be used either
    on its own, or as a stage within a :py:class:`.SerializerPipeline`.

    Args:
        factory: Converter factory, e.g. one of the ``cattr.preconf`` ``make_converter`` functions
        cl: Model class to structure loaded mappings into; if ``None``, loaded values are returned
            as plain python objects
    """

    def __init__(self, factory: Callable[..., GenConverter] = None, cl: type = None):
        self.factory = factory
        self.cl = cl
        self.converter = init_converter(factory)

    def with_model(self, cl: type) -> 'CattrStage':
        stage = CattrStage.__new__(CattrStage)
        stage.factory, stage.cl, stage.converter = self.factory, cl, self.converter
        return stage

    def dumps(self, value: Any) -> Any:
        return self.converter.unstructure(value)

    def loads(self, value: Any) -> Any:
        if self.cl is None or not isinstance(value, MutableMapping):
            return value
        return self.converter.structure(value, cl=self.cl)


def init_converter(factory: Callable[..., GenConverter] = None):
    """Make a converter to structure and unstructure models, including Pauli strings, observables,
    complex numbers and numpy values nested within them
    """
    factory = factory or GenConverter
    # Write every field, including those left at their defaults
    # Without detailed validation, model validators raise their own ValueErrors unwrapped
    converter = factory(omit_if_default=False, detailed_validation=False)

    # Pauli strings as signed labels, e.g. '+XZ'
    converter.register_unstructure_hook(PauliString, lambda obj: obj.to_label())
    converter.register_structure_hook(PauliString, _to_pauli)
    converter.register_unstructure_hook(PauliObservable, _unstructure_observable)
    converter.register_structure_hook(PauliObservable, _to_observable)

    # Complex numbers as [real, imag] pairs
    converter.register_unstructure_hook(complex, lambda obj: [obj.real, obj.imag])
    converter.register_structure_hook(complex, _to_complex)

    # numpy arrays and scalars as python lists and builtins
    converter.register_unstructure_hook(np.ndarray, _unstructure_array)
    converter.register_structure_hook(np.ndarray, lambda obj, cls: np.asarray(obj))
    converter.register_unstructure_hook_func(
        lambda cls: isinstance(cls, type) and issubclass(cls, np.generic),
        lambda obj: obj.item(),
    )
    return converter


def _to_pauli(obj, cls) -> PauliString:
    return obj if isinstance(obj, PauliString) else PauliString.from_label(obj)


def _unstructure_observable(obj: PauliObservable) -> Dict:
    terms = {}
    for pauli, coeff in obj.paulis():
        coeff = complex(coeff)
        terms[pauli.to_label()] = coeff.real if coeff.imag == 0 else [coeff.real, coeff.imag]
    return {'n_qubits': obj.n_qubits, 'terms': terms}


def _to_observable(obj: Mapping, cls) -> PauliObservable:
    if isinstance(obj, PauliObservable):
        return obj
    terms = [(label, _to_complex(coeff, complex)) for label, coeff in obj['terms'].items()]
    return PauliObservable.from_paulis(obj['n_qubits'], terms)


def _to_complex(obj: Union[float, List[float]], cls) -> complex:
    if isinstance(obj, (list, tuple)):
        return complex(obj[0], obj[1])
    return complex(obj)


def _unstructure_array(obj: np.ndarray) -> Optional[list]:
    if np.iscomplexobj(obj):
        return [[v.real, v.imag] for v in obj.ravel().tolist()]
    return obj.tolist()


def is_model(value: Any) -> bool:
    return has(type(value))
