"""Parse circuit templates into a tree.

A template is a whitespace separated sequence of gates::

    +X90 -Y180 I                  rotations; the angle defaults to the
                                  gate angle of the experiment
    @@G1@@  @@G1@@'               a placeholder, and its inverse
    (@@G1@@' @@G1@@)^N            a repeated block; the count is an
                                  integer or a name bound at expansion

``#`` starts a comment. Uses PyParsing; errors surface as its
``ParseException``.
"""

import numpy as np
from pyparsing import (
    Forward, Group, Literal, Optional, StringEnd, Suppress, Word,
    ZeroOrMore, alphanums, alphas, nums, oneOf, pythonStyleComment)

from .devices import Gate
from .hilbert import InvalidArgument


__all__ = ('parse_string', 'parse_circuit', 'find_variables', 'expand',
           'Rotation', 'Identity', 'Variable', 'Repeat')


################################################################################
###### Constructing the Grammar
######
###### Using - instead of + after an opening bracket means "no backtrack",
###### which keeps error messages pointing at the real problem.
################################################################################

items = Forward()

rotation = Optional(oneOf('+ -'), default='+') + oneOf('X Y') + \
    Optional(Word(nums), default='')

identity = Literal('I')

variable = Suppress('@@') + Word(alphas, alphanums + '_') + Suppress('@@') + \
    Optional(Literal("'"), default='')

count = Word(nums) | Word(alphas, alphanums + '_')

repeat = Suppress('(') - Group(items) - Suppress(')') - Suppress('^') - count

item = repeat | variable | identity | rotation
items << ZeroOrMore(item)

# A full template.
root = items + StringEnd()

root.ignore(pythonStyleComment)


################################################################################
###### Constructing the AST
################################################################################


class Node(object):
    def __eq__(self, other):
        if type(other) is type(self):
            return self.__dict__ == other.__dict__
        return False

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash(repr(self))


class Rotation(Node):
    def __init__(self, axis, sign=1, degrees=None):
        self.axis = axis
        self.sign = sign
        self.degrees = degrees

    def __str__(self):
        return '%s%s%s' % ('+' if self.sign > 0 else '-', self.axis,
                           '' if self.degrees is None else self.degrees)

    def __repr__(self):
        return '<%s %s>' % (self.__class__.__name__, self)


class Identity(Node):
    def __str__(self):
        return 'I'

    def __repr__(self):
        return '<Identity>'


class Variable(Node):
    def __init__(self, name, inverse=False):
        self.name = name
        self.inverse = inverse

    def __str__(self):
        return "@@%s@@%s" % (self.name, "'" if self.inverse else '')

    def __repr__(self):
        return '<%s %s>' % (self.__class__.__name__, self)


class Repeat(Node):
    def __init__(self, items, count):
        self.items = items
        self.count = count

    def __str__(self):
        return '(%s)^%s' % (' '.join(map(str, self.items)), self.count)

    def __repr__(self):
        return '<%s %s times=%s>' % (
            self.__class__.__name__, list(map(repr, self.items)), self.count)


def _count(token):
    return int(token) if token.isdigit() else token


rotation.setParseAction(lambda _, __, toks: Rotation(
    toks[1], 1 if toks[0] == '+' else -1, int(toks[2]) if toks[2] else None))
identity.setParseAction(lambda _, __, toks: Identity())
variable.setParseAction(lambda _, __, toks: Variable(toks[0], bool(toks[1])))
repeat.setParseAction(lambda _, __, toks: Repeat(list(toks[0]), _count(toks[1])))


parse_string = root.parseString


def parse_circuit(text):
    return list(parse_string(text))


def find_variables(document):
    """Placeholder and repetition-count names used by ``document``.

    Accepts template text or a parsed tree.
    """
    if isinstance(document, str):
        document = parse_circuit(document)
    found = set()
    for node in document:
        if isinstance(node, Variable):
            found.add(node.name)
        elif isinstance(node, Repeat):
            if isinstance(node.count, str):
                found.add(node.count)
            found |= find_variables(node.items)
    return found


def expand(document, variables=None, counts=None, theta=np.pi):
    """Flatten a template into a list of ``Gate``.

    ``variables`` maps placeholder names to ``Gate`` objects or gate text;
    ``counts`` maps repetition names to integers.
    """
    if isinstance(document, str):
        document = parse_circuit(document)
    variables = variables or {}
    counts = counts or {}
    out = []
    for node in document:
        if isinstance(node, Rotation):
            angle = theta if node.degrees is None else np.radians(node.degrees)
            out.append(Gate(node.axis, angle, node.sign))
        elif isinstance(node, Identity):
            out.append(Gate('I', theta))
        elif isinstance(node, Variable):
            try:
                value = variables[node.name]
            except KeyError:
                raise InvalidArgument('no value for @@%s@@' % node.name)
            gates = expand(value, theta=theta) if isinstance(value, str) \
                else [value]
            if node.inverse:
                gates = [g.inverse() for g in reversed(gates)]
            out.extend(gates)
        elif isinstance(node, Repeat):
            n = node.count
            if isinstance(n, str):
                try:
                    n = counts[n]
                except KeyError:
                    raise InvalidArgument('no repetition count for %s' % n)
            out.extend(expand(node.items, variables, counts, theta) * int(n))
    return out
