"""Automatic parallelization of JVM bytecode.

Pipeline: classfile parsing, stack-simulation decompilation, loop
normalization, Fourier-Motzkin dependence analysis, transformation
enumeration, threaded code generation, autotuning, and a deterministic
interpreter used to verify serial/parallel equivalence.
"""

__version__ = "0.1.0"
