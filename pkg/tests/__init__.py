"""
Pacote de Testes - Governance Gateway
"""

