"""Registry of symbol names and their roles."""

from __future__ import annotations

from fractions import Fraction

ROLES = ("state", "input", "shifted_state", "fibre", "shifted_input",
         "parameter", "output")


class VarTable:
    """Ordered set of symbol names, each tagged with a role.

    Parameters additionally carry a rational value; the parser replaces
    them by that constant.
    """

    def __init__(self, entries=()):
        self._roles = {}
        self._params = {}
        for name, role in entries:
            self.add(name, role)

    def add(self, name, role):
        if role not in ROLES:
            raise ValueError(f"unknown role {role!r}")
        if name in self._roles and self._roles[name] != role:
            raise ValueError(f"symbol {name!r} already registered as "
                             f"{self._roles[name]}")
        self._roles[name] = role
        return self

    def add_param(self, name, value):
        self.add(name, "parameter")
        self._params[name] = Fraction(value)
        return self

    def __contains__(self, name):
        return name in self._roles

    def role(self, name):
        return self._roles[name]

    def param_value(self, name):
        return self._params.get(name)

    @property
    def params(self):
        return dict(self._params)

    def names(self, role=None):
        return [n for n, r in self._roles.items() if role is None or r == role]

    def copy(self):
        t = VarTable()
        t._roles = dict(self._roles)
        t._params = dict(self._params)
        return t

    def __repr__(self):
        return f"VarTable({list(self._roles.items())!r})"
