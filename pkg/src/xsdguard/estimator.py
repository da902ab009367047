"""A scikit-learn style facade: ``fit`` compiles a schema, ``predict`` validates.

    >>> v = XsdValidator(max_depth=64).fit(schema_bytes)
    >>> v.predict([doc1, doc2])          # 1 valid, 0 invalid
    array([1, 0])
"""
from __future__ import annotations

import hashlib
from typing import Any

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_documents, check_schema_source
from .diagnostics import DEFAULT_LIMITS, Code, Diagnostic, Limits
from .validator import Invalid, Valid, Verdict, load_schema, validate_document
from .xmlcore import WfError, parse_document

__all__ = ["XsdValidator"]

_CODES = tuple(Code)


class XsdValidator(ClassifierMixin, BaseEstimator):
    """Validate documents against one compiled schema.

    Every resource limit is a constructor parameter, so ``get_params`` and
    ``set_params`` behave as usual.  Parameters may exceed the defaults;
    unlike the command line there is no separate opt-in here.
    """

    def __init__(
        self,
        max_input_bytes: int = DEFAULT_LIMITS.max_input_bytes,
        max_depth: int = DEFAULT_LIMITS.max_depth,
        max_attrs_per_element: int = DEFAULT_LIMITS.max_attrs_per_element,
        max_name_bytes: int = DEFAULT_LIMITS.max_name_bytes,
        max_attr_value_bytes: int = DEFAULT_LIMITS.max_attr_value_bytes,
        max_total_nodes: int = DEFAULT_LIMITS.max_total_nodes,
        max_occurs_bound: int = DEFAULT_LIMITS.max_occurs_bound,
        max_automaton_states: int = DEFAULT_LIMITS.max_automaton_states,
        max_pattern_length: int = DEFAULT_LIMITS.max_pattern_length,
    ) -> None:
        self.max_input_bytes = max_input_bytes
        self.max_depth = max_depth
        self.max_attrs_per_element = max_attrs_per_element
        self.max_name_bytes = max_name_bytes
        self.max_attr_value_bytes = max_attr_value_bytes
        self.max_total_nodes = max_total_nodes
        self.max_occurs_bound = max_occurs_bound
        self.max_automaton_states = max_automaton_states
        self.max_pattern_length = max_pattern_length

    def _limits(self) -> Limits:
        return Limits(**{name: getattr(self, name) for name in Limits.names()})

    def fit(self, X: Any, y: Any = None) -> XsdValidator:
        """Compile the schema ``X`` (bytes, XML text or a path).

        Raises :class:`~xsdguard.xsdmodel.SchemaRejected` if it is unusable.
        """
        self.limits_ = self._limits()
        data = check_schema_source(X, self.limits_.max_input_bytes)
        self.compiled_schema_ = load_schema(data, self.limits_)
        self.schema_digest_ = hashlib.sha256(data).hexdigest()
        self.classes_ = np.array([0, 1])
        return self

    def validate(self, X: Any) -> list[Verdict]:
        """One verdict per document; documents that fail to parse are Invalid."""
        check_is_fitted(self, "compiled_schema_")
        out: list[Verdict] = []
        for data in check_documents(X):
            try:
                doc = parse_document(data, self.limits_)
            except WfError as exc:
                out.append(Invalid((exc.diagnostic,)))
                continue
            out.append(validate_document(doc, self.compiled_schema_, self.limits_))
        return out

    def predict(self, X: Any) -> np.ndarray:
        return np.array([1 if isinstance(v, Valid) else 0 for v in self.validate(X)], dtype=np.int64)

    def transform(self, X: Any) -> np.ndarray:
        """Per-document counts of each diagnostic code, columns in ``Code`` order."""
        verdicts = self.validate(X)
        counts = np.zeros((len(verdicts), len(_CODES)), dtype=np.int64)
        column = {c: i for i, c in enumerate(_CODES)}
        for row, v in enumerate(verdicts):
            diags: tuple[Diagnostic, ...] = v.diagnostics if isinstance(v, Invalid) else ()
            for d in diags:
                counts[row, column[d.code]] += 1
        return counts

    def get_feature_names_out(self, input_features: Any = None) -> np.ndarray:
        return np.array([c.value for c in _CODES], dtype=object)
