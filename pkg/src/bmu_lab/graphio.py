"""Directed-graph snapshots of agent topology, with DOT and GEXF round-trip.

Snapshots are plain node/edge lists with typed attributes (str, int, float
or bool). The writers emit a small, predictable dialect; the readers parse
exactly that dialect, which is enough for the analytics pipeline and for
external layout tools (Gephi reads the GEXF files directly).
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

Attrs = dict[str, object]


@dataclass
class GraphSnapshot:
    name: str = "bmu_lab"
    nodes: list[tuple[str, Attrs]] = field(default_factory=list)
    edges: list[tuple[str, str, Attrs]] = field(default_factory=list)

    def node_ids(self) -> list[str]:
        return [node_id for node_id, _ in self.nodes]


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _dot_value(value) -> str:
    if isinstance(value, bool):
        return '"true"' if value else '"false"'
    if isinstance(value, (int, float)):
        return repr(value)
    return f'"{_dot_escape(str(value))}"'


def to_dot(snapshot: GraphSnapshot) -> str:
    lines = [f'digraph "{_dot_escape(snapshot.name)}" {{']
    for node_id, attrs in snapshot.nodes:
        attr_text = ", ".join(f"{k}={_dot_value(v)}" for k, v in attrs.items())
        suffix = f" [{attr_text}]" if attr_text else ""
        lines.append(f'  "{_dot_escape(node_id)}"{suffix};')
    for source, target, attrs in snapshot.edges:
        attr_text = ", ".join(f"{k}={_dot_value(v)}" for k, v in attrs.items())
        suffix = f" [{attr_text}]" if attr_text else ""
        lines.append(f'  "{_dot_escape(source)}" -> "{_dot_escape(target)}"{suffix};')
    lines.append("}")
    return "\n".join(lines) + "\n"


_DOT_NODE = re.compile(r'^\s*"((?:[^"\\]|\\.)*)"(?:\s*\[(.*)\])?;\s*$')
_DOT_EDGE = re.compile(r'^\s*"((?:[^"\\]|\\.)*)"\s*->\s*"((?:[^"\\]|\\.)*)"(?:\s*\[(.*)\])?;\s*$')
_DOT_ATTR = re.compile(r'(\w+)=(?:"((?:[^"\\]|\\.)*)"|([^,\]]+))')


def _dot_unescape(text: str) -> str:
    return text.replace('\\"', '"').replace("\\\\", "\\")


def _parse_dot_attrs(text: str | None) -> Attrs:
    attrs: Attrs = {}
    if not text:
        return attrs
    for match in _DOT_ATTR.finditer(text):
        key, quoted, bare = match.groups()
        if quoted is not None:
            attrs[key] = _dot_unescape(quoted)
        else:
            attrs[key] = _coerce_scalar(bare.strip())
    return attrs


def _coerce_scalar(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_dot(text: str) -> GraphSnapshot:
    """Parse the dialect produced by to_dot."""
    header = re.search(r'digraph\s+"((?:[^"\\]|\\.)*)"', text)
    snapshot = GraphSnapshot(name=_dot_unescape(header.group(1)) if header else "graph")
    for line in text.splitlines():
        edge = _DOT_EDGE.match(line)
        if edge:
            source, target, attr_text = edge.groups()
            snapshot.edges.append(
                (_dot_unescape(source), _dot_unescape(target), _parse_dot_attrs(attr_text))
            )
            continue
        node = _DOT_NODE.match(line)
        if node:
            node_id, attr_text = node.groups()
            snapshot.nodes.append((_dot_unescape(node_id), _parse_dot_attrs(attr_text)))
    return snapshot


_GEXF_NS = "http://www.gexf.net/1.2draft"

_GEXF_TYPES = {bool: "boolean", int: "integer", float: "double", str: "string"}


def _attr_type(value) -> str:
    for py_type, gexf_type in _GEXF_TYPES.items():
        if type(value) is py_type:
            return gexf_type
    return "string"


def _collect_attr_schema(items: list[tuple]) -> dict[str, str]:
    schema: dict[str, str] = {}
    for item in items:
        for key, value in item[-1].items():
            schema.setdefault(key, _attr_type(value))
    return schema


def to_gexf(snapshot: GraphSnapshot) -> str:
    ET.register_namespace("", _GEXF_NS)
    root = ET.Element(f"{{{_GEXF_NS}}}gexf", version="1.2")
    graph = ET.SubElement(root, f"{{{_GEXF_NS}}}graph",
                          defaultedgetype="directed", mode="static")

    node_schema = _collect_attr_schema(snapshot.nodes)
    edge_schema = _collect_attr_schema(snapshot.edges)
    for cls, schema in (("node", node_schema), ("edge", edge_schema)):
        if not schema:
            continue
        attributes = ET.SubElement(graph, f"{{{_GEXF_NS}}}attributes")
        attributes.set("class", cls)
        for attr_id, (key, gexf_type) in enumerate(schema.items()):
            ET.SubElement(attributes, f"{{{_GEXF_NS}}}attribute",
                          id=str(attr_id), title=key, type=gexf_type)

    def fill_attvalues(parent, attrs: Attrs, schema: dict[str, str]) -> None:
        if not attrs:
            return
        attvalues = ET.SubElement(parent, f"{{{_GEXF_NS}}}attvalues")
        keys = list(schema.keys())
        for key, value in attrs.items():
            if isinstance(value, bool):
                rendered = "true" if value else "false"
            else:
                rendered = repr(value) if isinstance(value, float) else str(value)
            ET.SubElement(attvalues, f"{{{_GEXF_NS}}}attvalue",
                          **{"for": str(keys.index(key)), "value": rendered})

    nodes_el = ET.SubElement(graph, f"{{{_GEXF_NS}}}nodes")
    for node_id, attrs in snapshot.nodes:
        node_el = ET.SubElement(nodes_el, f"{{{_GEXF_NS}}}node", id=node_id, label=node_id)
        fill_attvalues(node_el, attrs, node_schema)

    edges_el = ET.SubElement(graph, f"{{{_GEXF_NS}}}edges")
    for edge_id, (source, target, attrs) in enumerate(snapshot.edges):
        edge_el = ET.SubElement(edges_el, f"{{{_GEXF_NS}}}edge",
                                id=str(edge_id), source=source, target=target)
        fill_attvalues(edge_el, attrs, edge_schema)

    ET.indent(root)
    body = ET.tostring(root, encoding="unicode")
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + body + "\n"


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _typed(value: str, gexf_type: str):
    if gexf_type == "integer":
        return int(value)
    if gexf_type == "double":
        return float(value)
    if gexf_type == "boolean":
        return value == "true"
    return value


def read_gexf(text: str) -> GraphSnapshot:
    root = ET.fromstring(text)
    snapshot = GraphSnapshot(name="graph")

    schemas: dict[str, dict[str, tuple[str, str]]] = {"node": {}, "edge": {}}
    for attributes in root.iter():
        if _local(attributes.tag) != "attributes":
            continue
        cls = attributes.get("class", "node")
        for attribute in attributes:
            schemas[cls][attribute.get("id")] = (
                attribute.get("title"),
                attribute.get("type", "string"),
            )

    def read_attrs(element, cls: str) -> Attrs:
        attrs: Attrs = {}
        for child in element.iter():
            if _local(child.tag) != "attvalue":
                continue
            title, gexf_type = schemas[cls][child.get("for")]
            attrs[title] = _typed(child.get("value"), gexf_type)
        return attrs

    for element in root.iter():
        tag = _local(element.tag)
        if tag == "node":
            snapshot.nodes.append((element.get("id"), read_attrs(element, "node")))
        elif tag == "edge":
            snapshot.edges.append(
                (element.get("source"), element.get("target"), read_attrs(element, "edge"))
            )
    return snapshot
