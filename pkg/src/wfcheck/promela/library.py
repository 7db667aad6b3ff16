"""The pattern library ``utils.pr``.

``send``, ``recv``, ``parallelSplit`` and ``exclusiveChoice`` are kept
character for character. ``synchronization`` indexes its own
``qs``/``msgs`` parameters and uses ``j`` as its index so it can share a
proctype with ``parallelSplit`` (both would otherwise declare ``int n``).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..patterns import DEFAULT_MAX_ARRAY_SIZE

SEND = "inline send(q, msg){ q!msg;}"
RECV = "inline recv(q, msg){ q?msg;}"

PARALLEL_SPLIT = """\
inline parallelSplit(qs, sizeq, msg){
  int n;
  n=0;
  atomic {
    do
      :: n<sizeq -> qs[n]!msg[n]; n++;
      :: n>=sizeq -> break;
    od; }}"""

SYNCHRONIZATION = """\
inline synchronization(qs, sizeq, msgs){
  int j, count;
  j=0; count=0;
  /* MAXARRAYSIZE: The capacity of the arrays defined in the file
   * which contains the translations of the workflow patterns */
  int aux[MAXARRAYSIZE];
  do
    ::j<sizeq -> aux[j]=0; j++;
    ::j==sizeq -> j=0; break;
  od;
  skip;
  S:
    if
      ::((aux[j]==0) && (len(qs[j]) > 0) && count<sizeq)->
        aux[j]=1; qs[j]?msgs[j]; count++
      ::count>=sizeq -> goto E
      ::else -> skip;
    fi;
  j++;
  if
    ::j==sizeq -> j=0; timeout;
    ::j<sizeq -> skip;
  fi;
  goto S;
  E: skip;}"""

EXCLUSIVE_CHOICE = """\
inline exclusiveChoice(qs, sizeq, choice, msg){
  if :: (choice>=0 && choice<sizeq) -> qs[choice]!msg;
     :: else -> skip;
  fi;}"""

CANCEL_CASE = """\
inline cancelCase(qsCancel, sizeq, piIds, msgs, id){
  int i=0;
  do :: i<sizeq && piIds[i]==id -> qsCancel[i]!msgs[i];i++;
     :: i==sizeq -> break;
     :: else -> i++;
  od;}"""

# First message wins, the others stay queued. Needs a fixed number of
# branches, so it comes in one variant per size used by the model.
SIMPLE_MERGE_NOTE = "/* simpleMergeN: first message wins, one variant per branch count. */"


def simple_merge(sizeq: int) -> str:
    opts = "\n".join(f"    :: qs[{i}]?x -> break" for i in range(sizeq))
    return f"inline simpleMerge{sizeq}(qs, x){{\n  do\n{opts}\n  od;}}"


@dataclass(frozen=True)
class EmitConfig:
    max_array_size: int = DEFAULT_MAX_ARRAY_SIZE
    include_name: str = "utils.pr"
    channel_capacity: int = 1
    merge_sizes: tuple = (2,)  # simpleMerge variants in the library

    def __post_init__(self):
        if self.max_array_size < 1:
            raise ValueError("max_array_size must be positive")


def emit_pattern_library(config: EmitConfig = EmitConfig()) -> str:
    parts = [
        "/* File with the translations of the workflow patterns. */",
        f"#define MAXARRAYSIZE {config.max_array_size}",
        "",
        SEND,
        RECV,
        "",
        PARALLEL_SPLIT,
        "",
        SYNCHRONIZATION,
        "",
        EXCLUSIVE_CHOICE,
        "",
        CANCEL_CASE,
        "",
        SIMPLE_MERGE_NOTE,
    ]
    for k in sorted(set(config.merge_sizes)):
        parts.append(simple_merge(k))
    return "\n".join(parts) + "\n"
