"""
Laboratório de Passeios Hiperbólicos - Passeios aleatórios em grupos hiperbólicos
Kernels de Green, fronteira de árvores, operador de transferência e teoremas limite

Este pacote implementa um laboratório numérico para passeios aleatórios com
suporte finito em grupos livres, produtos livres de grupos cíclicos e no
grupo lamplighter ℤ≀ℤ (caso de controle amenável).

Módulos Principais:
- groups / cayley: aritmética de palavras reduzidas e bolas de Cayley
- walk / batch: medidas de passo, convolução e simulação em lote
- green: kernel de Green, métrica de Green, kernels de Martin e Hilbert
- boundary: pontos de fronteira, horofunções e produtos de Gromov
- dynamics: medida estacionária, operador de transferência e Poisson
- limits: drift, TCL, LIL, martingal e expoente do lamplighter
- main: CLI com artefatos JSON/CSV reprodutíveis
"""

__version__ = "0.1.0"
